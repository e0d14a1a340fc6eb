#pragma once

#include "pnpsde/analysis.hpp"
#include "pnpsde/image_grid.hpp"
#include "pnpsde/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pnpsde {

/// Reads a binary PGM (P5, maxval <= 255) or an 8-bit grayscale PNG and maps
/// pixels to [0, 1] by dividing by maxval. Throws FormatError (with byte
/// offset) for unsupported or corrupt input and IoError if the file cannot be read.
ImageGrid load_image(const std::filesystem::path& path);

/// Parses an in-memory PGM (P5) file.
ImageGrid decode_pgm(std::string_view bytes);

/// Writes a P5 PGM with maxval 255; values are clamped to [0, 1] and rounded.
void save_pgm(const ImageGrid& image, const std::filesystem::path& path);

/// One line of the per-step CSV.
struct StepRow {
    std::size_t step = 0;
    double stepDiff = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double sigma = 0.0;
    friend bool operator==(const StepRow&, const StepRow&) = default;
};

inline constexpr std::string_view kCsvHeader = "step,stepDiff,psnr,ssim,sigma_t";

/// Rows for steps 1..T: stepDiffs[t-1], metrics of v^t (NaN without metrics)
/// and the sigma used to produce v^t.
std::vector<StepRow> step_rows(const Trajectory& traj);

struct ExperimentRecord {
    nlohmann::json config;
    std::optional<ConvergenceCertificate> certificate;
    std::vector<StepRow> rows;
    std::string status;
    std::map<std::string, double> summary;
    double durationSeconds = 0.0;
};

/// Header plus one row per step, LF endings, shortest round-trip decimal form
/// (non-finite values as nan / inf / -inf).
std::string format_csv(const std::vector<StepRow>& rows);
void save_csv(const ExperimentRecord& record, const std::filesystem::path& path);
std::vector<StepRow> parse_csv(std::string_view text);
std::vector<StepRow> load_csv(const std::filesystem::path& path);

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double v);

nlohmann::json to_json(const ConvergenceCertificate& cert);
ConvergenceCertificate certificate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentRecord& record);
ExperimentRecord record_from_json(const nlohmann::json& j);
void save_record(const ExperimentRecord& record, const std::filesystem::path& path);
ExperimentRecord load_record(const std::filesystem::path& path);

/// Writes text atomically enough for our purposes; throws IoError on failure.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

enum class PhantomKind { ramp, checkerboard, disk, piecewise };

PhantomKind parse_phantom_kind(std::string_view name);
std::string_view to_string(PhantomKind kind) noexcept;

/// Deterministic synthetic images in [0, 1]:
///   ramp         row-major linear ramp k / (n - 1)
///   checkerboard one-pixel cells, pixel (0, 0) = 0
///   disk         1 inside a centred disk of radius 0.35 min(h, w), 0 outside
///   piecewise    piecewise-constant blocks at levels 0.2 / 0.5 / 0.8 with a
///                vertical step edge
/// Throws DimensionError when either side is below 2.
ImageGrid synth_phantom(PhantomKind kind, std::size_t height, std::size_t width);

}  // namespace pnpsde
