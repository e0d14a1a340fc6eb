#include "pnpsde/io.hpp"

#include "pnpsde/errors.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace pnpsde {

namespace fs = std::filesystem;

void write_text(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// PGM / PNG

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

void skip_space_and_comments(std::string_view b, std::size_t& pos) {
    while (pos < b.size()) {
        if (is_space(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
}

std::size_t read_header_int(std::string_view b, std::size_t& pos, const char* field) {
    skip_space_and_comments(b, pos);
    const std::size_t start = pos;
    std::size_t value = 0;
    while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
        value = value * 10 + static_cast<std::size_t>(b[pos] - '0');
        if (value > 1u << 20) throw FormatError(std::string("PGM ") + field + " too large", start);
        ++pos;
    }
    if (pos == start) throw FormatError(std::string("PGM header: expected ") + field, pos);
    return value;
}

ImageGrid decode_png(std::string_view bytes) {
    static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() < 33) throw FormatError("PNG file truncated before IHDR", bytes.size());
    if (!std::equal(std::begin(kSig), std::end(kSig), bytes.begin(),
                    [](unsigned char a, char b) { return a == static_cast<unsigned char>(b); })) {
        throw FormatError("bad PNG signature", 0);
    }
    const auto bit_depth = static_cast<unsigned char>(bytes[24]);
    const auto color_type = static_cast<unsigned char>(bytes[25]);
    if (bit_depth != 8) throw FormatError("only 8-bit PNG is supported", 24);
    if (color_type != PNG_COLOR_TYPE_GRAY) throw FormatError("only grayscale PNG is supported", 25);

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw FormatError(std::string("PNG header: ") + image.message, 8);
    }
    image.format = PNG_FORMAT_GRAY;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw FormatError("PNG data: " + msg, 33);
    }
    ImageGrid out(image.height, image.width);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = buffer[i] / 255.0;
    return out;
}

}  // namespace

ImageGrid decode_pgm(std::string_view b) {
    if (b.size() < 2 || b[0] != 'P' || b[1] != '5') {
        throw FormatError("not a binary PGM (expected 'P5')", 0);
    }
    std::size_t pos = 2;
    const std::size_t width = read_header_int(b, pos, "width");
    const std::size_t height = read_header_int(b, pos, "height");
    const std::size_t maxval_pos = pos;
    const std::size_t maxval = read_header_int(b, pos, "maxval");
    if (width == 0 || height == 0) throw FormatError("PGM dimensions must be positive", maxval_pos);
    if (maxval == 0 || maxval > 255) {
        throw FormatError("PGM maxval must be in [1, 255]", maxval_pos);
    }
    if (pos >= b.size() || !is_space(b[pos])) {
        throw FormatError("PGM header: expected whitespace after maxval", pos);
    }
    ++pos;
    const std::size_t n = width * height;
    if (b.size() - pos < n) {
        throw FormatError("PGM pixel data truncated: expected " + std::to_string(n) + " bytes",
                          b.size());
    }
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<unsigned char>(b[pos + i]);
        if (v > maxval) throw FormatError("PGM sample exceeds maxval", pos + i);
        data[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return ImageGrid(height, width, std::move(data));
}

ImageGrid load_image(const fs::path& path) {
    const std::string bytes = read_text(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
    if (!bytes.empty() && static_cast<unsigned char>(bytes[0]) == 0x89) return decode_png(bytes);
    throw FormatError("unsupported image format (expected P5 PGM or PNG)", 0);
}

void save_pgm(const ImageGrid& image, const fs::path& path) {
    std::string out = "P5\n" + std::to_string(image.width()) + " " +
                      std::to_string(image.height()) + "\n255\n";
    out.reserve(out.size() + image.size());
    for (double v : image.values()) {
        const double c = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    write_text(path, out);
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw FormatError("CSV line " + std::to_string(line) + ": bad number '" +
                              std::string(s) + "'",
                          0);
    }
    return v;
}

}  // namespace

std::vector<StepRow> step_rows(const Trajectory& traj) {
    std::vector<StepRow> rows;
    rows.reserve(traj.steps());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t t = 1; t <= traj.steps(); ++t) {
        StepRow r;
        r.step = t;
        r.stepDiff = traj.stepDiffs[t - 1];
        r.sigma = traj.sigmas[t - 1];
        if (t < traj.metrics.size()) {
            r.psnr = traj.metrics[t].psnr;
            r.ssim = traj.metrics[t].ssim;
        } else {
            r.psnr = nan;
            r.ssim = nan;
        }
        rows.push_back(r);
    }
    return rows;
}

std::string format_csv(const std::vector<StepRow>& rows) {
    std::string out(kCsvHeader);
    out.push_back('\n');
    for (const auto& r : rows) {
        out += std::to_string(r.step);
        for (double v : {r.stepDiff, r.psnr, r.ssim, r.sigma}) {
            out.push_back(',');
            out += format_double(v);
        }
        out.push_back('\n');
    }
    return out;
}

void save_csv(const ExperimentRecord& record, const fs::path& path) {
    write_text(path, format_csv(record.rows));
}

std::vector<StepRow> parse_csv(std::string_view text) {
    std::vector<StepRow> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != kCsvHeader) throw FormatError("CSV header mismatch", 0);
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 5) {
            throw FormatError("CSV line " + std::to_string(line_no) + ": expected 5 fields", 0);
        }
        StepRow r;
        const auto res =
            std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), r.step);
        if (res.ec != std::errc()) {
            throw FormatError("CSV line " + std::to_string(line_no) + ": bad step", 0);
        }
        r.stepDiff = parse_double(fields[1], line_no);
        r.psnr = parse_double(fields[2], line_no);
        r.ssim = parse_double(fields[3], line_no);
        r.sigma = parse_double(fields[4], line_no);
        rows.push_back(r);
    }
    if (line_no == 0) throw FormatError("CSV is empty", 0);
    return rows;
}

std::vector<StepRow> load_csv(const fs::path& path) { return parse_csv(read_text(path)); }

// ---------------------------------------------------------------------------
// JSON records. Non-finite numbers are stored as the strings "nan", "inf", "-inf".

namespace {

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

double number_from(const nlohmann::json& j) {
    if (j.is_string()) return parse_double(j.get<std::string>(), 0);
    return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const ConvergenceCertificate& c) {
    nlohmann::json j;
    j["hLipschitz"] = number(c.hLipschitz);
    j["dLipschitz"] = number(c.dLipschitz);
    j["driftBound"] = number(c.driftBound);
    j["denoiserBound"] = c.denoiserBound ? number(*c.denoiserBound) : nlohmann::json(nullptr);
    j["residualBoundC"] = number(c.residualBoundC);
    j["regime"] = std::string(to_string(c.regime));
    return j;
}

ConvergenceCertificate certificate_from_json(const nlohmann::json& j) {
    ConvergenceCertificate c;
    c.hLipschitz = number_from(j.at("hLipschitz"));
    c.dLipschitz = number_from(j.at("dLipschitz"));
    c.driftBound = number_from(j.at("driftBound"));
    if (!j.at("denoiserBound").is_null()) c.denoiserBound = number_from(j.at("denoiserBound"));
    c.residualBoundC = number_from(j.at("residualBoundC"));
    const auto regime = j.at("regime").get<std::string>();
    c.regime = regime == "strong" ? Regime::strong : (regime == "weak" ? Regime::weak : Regime::none);
    return c;
}

nlohmann::json to_json(const ExperimentRecord& r) {
    nlohmann::json j;
    j["config"] = r.config;
    j["certificate"] = r.certificate ? to_json(*r.certificate) : nlohmann::json(nullptr);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"step", row.step},
                        {"stepDiff", number(row.stepDiff)},
                        {"psnr", number(row.psnr)},
                        {"ssim", number(row.ssim)},
                        {"sigma_t", number(row.sigma)}});
    }
    j["rows"] = std::move(rows);
    j["status"] = r.status;
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [k, v] : r.summary) summary[k] = number(v);
    j["summary"] = std::move(summary);
    j["durationSeconds"] = r.durationSeconds;
    return j;
}

ExperimentRecord record_from_json(const nlohmann::json& j) {
    ExperimentRecord r;
    r.config = j.at("config");
    if (!j.at("certificate").is_null()) r.certificate = certificate_from_json(j.at("certificate"));
    for (const auto& row : j.at("rows")) {
        StepRow s;
        s.step = row.at("step").get<std::size_t>();
        s.stepDiff = number_from(row.at("stepDiff"));
        s.psnr = number_from(row.at("psnr"));
        s.ssim = number_from(row.at("ssim"));
        s.sigma = number_from(row.at("sigma_t"));
        r.rows.push_back(s);
    }
    r.status = j.at("status").get<std::string>();
    for (const auto& [k, v] : j.at("summary").items()) r.summary[k] = number_from(v);
    r.durationSeconds = j.at("durationSeconds").get<double>();
    return r;
}

void save_record(const ExperimentRecord& record, const fs::path& path) {
    write_text(path, to_json(record).dump(2) + "\n");
}

ExperimentRecord load_record(const fs::path& path) {
    try {
        return record_from_json(nlohmann::json::parse(read_text(path)));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("record JSON: ") + e.what(), 0);
    }
}

// ---------------------------------------------------------------------------
// Phantoms

PhantomKind parse_phantom_kind(std::string_view name) {
    if (name == "ramp") return PhantomKind::ramp;
    if (name == "checkerboard") return PhantomKind::checkerboard;
    if (name == "disk") return PhantomKind::disk;
    if (name == "piecewise") return PhantomKind::piecewise;
    throw ParameterError("unknown phantom '" + std::string(name) + "'");
}

std::string_view to_string(PhantomKind kind) noexcept {
    switch (kind) {
        case PhantomKind::ramp: return "ramp";
        case PhantomKind::checkerboard: return "checkerboard";
        case PhantomKind::disk: return "disk";
        case PhantomKind::piecewise: return "piecewise";
    }
    return "unknown";
}

ImageGrid synth_phantom(PhantomKind kind, std::size_t height, std::size_t width) {
    if (height < 2 || width < 2) throw DimensionError("phantom sides must be at least 2");
    ImageGrid img(height, width);
    const std::size_t n = height * width;
    switch (kind) {
        case PhantomKind::ramp:
            for (std::size_t k = 0; k < n; ++k) {
                img[k] = static_cast<double>(k) / static_cast<double>(n - 1);
            }
            break;
        case PhantomKind::checkerboard:
            for (std::size_t r = 0; r < height; ++r) {
                for (std::size_t c = 0; c < width; ++c) img(r, c) = (r + c) % 2 == 0 ? 0.0 : 1.0;
            }
            break;
        case PhantomKind::disk: {
            const double cr = (static_cast<double>(height) - 1.0) / 2.0;
            const double cc = (static_cast<double>(width) - 1.0) / 2.0;
            const double radius = 0.35 * static_cast<double>(std::min(height, width));
            for (std::size_t r = 0; r < height; ++r) {
                for (std::size_t c = 0; c < width; ++c) {
                    const double dr = static_cast<double>(r) - cr;
                    const double dc = static_cast<double>(c) - cc;
                    img(r, c) = dr * dr + dc * dc <= radius * radius ? 1.0 : 0.0;
                }
            }
            break;
        }
        case PhantomKind::piecewise:
            for (std::size_t r = 0; r < height; ++r) {
                for (std::size_t c = 0; c < width; ++c) {
                    double v = c < width / 2 ? 0.2 : 0.8;
                    if (r >= height / 4 && r < 3 * height / 4 && c >= width / 4 && c < width / 2) {
                        v = 0.5;
                    }
                    img(r, c) = v;
                }
            }
            break;
    }
    return img;
}

}  // namespace pnpsde
