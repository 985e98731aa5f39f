#include "walab/artifacts.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace walab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

CsvBuilder::CsvBuilder(const std::string& schema_comment, const std::vector<std::string>& columns)
    : n_cols_(columns.size()) {
    text_ = "# " + schema_comment + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        text_ += columns[i];
        text_ += (i + 1 == columns.size()) ? '\n' : ',';
    }
}

void CsvBuilder::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != n_cols_) throw UsageError("csv: row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        text_ += cells[i];
        text_ += (i + 1 == cells.size()) ? '\n' : ',';
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

namespace {

void put_le64(std::string& out, std::uint64_t bits) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

std::uint64_t get_le64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return bits;
}

}  // namespace

void write_checkpoint(const std::string& path, const nlohmann::json& meta, const Vec64& params) {
    nlohmann::json header = meta;
    header["format"] = "walab-ckpt-v1";
    header["count"] = params.size();
    std::string blob = header.dump();
    blob += '\n';
    blob.reserve(blob.size() + params.size() * 8);
    for (double v : params) put_le64(blob, std::bit_cast<std::uint64_t>(v));
    write_text_file(path, blob);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::string blob = read_text_file(path);
    auto nl = blob.find('\n');
    if (nl == std::string::npos) throw IoError("checkpoint " + path + ": missing header line");
    Checkpoint ckpt;
    ckpt.meta = nlohmann::json::parse(blob.substr(0, nl), nullptr, false);
    if (ckpt.meta.is_discarded() || ckpt.meta.value("format", "") != "walab-ckpt-v1") {
        throw IoError("checkpoint " + path + ": bad header");
    }
    const auto count = ckpt.meta.at("count").get<std::size_t>();
    if (blob.size() - nl - 1 != count * 8) {
        throw IoError("checkpoint " + path + ": payload size mismatch");
    }
    ckpt.params.resize(count);
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data() + nl + 1);
    for (std::size_t i = 0; i < count; ++i) {
        ckpt.params[i] = std::bit_cast<double>(get_le64(p + i * 8));
    }
    return ckpt;
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

namespace {

constexpr int kW = 640;
constexpr int kH = 420;
constexpr int kPad = 50;

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Range {
    double lo = 0.0, hi = 1.0;
    void expand(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    static Range of(const std::vector<double>& v) {
        Range r{v.empty() ? 0.0 : v.front(), v.empty() ? 1.0 : v.front()};
        for (double x : v) r.expand(x);
        if (r.hi == r.lo) r.hi = r.lo + 1.0;
        return r;
    }
    double to_unit(double v) const { return (v - lo) / (hi - lo); }
};

std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string svg_line_plot(const std::vector<double>& x, const std::vector<std::vector<double>>& series,
                          const std::vector<std::string>& labels, const std::string& title) {
    Range xr = Range::of(x);
    Range yr{0.0, 0.0};
    bool first = true;
    for (const auto& s : series) {
        for (double v : s) {
            if (!std::isfinite(v)) continue;
            if (first) {
                yr.lo = yr.hi = v;
                first = false;
            }
            yr.expand(v);
        }
    }
    if (yr.hi == yr.lo) yr.hi = yr.lo + 1.0;

    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(kW) + "' height='" +
                      std::to_string(kH) + "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    svg += "<text x='" + std::to_string(kW / 2) + "' y='20' text-anchor='middle' font-size='14'>" + title +
           "</text>\n";
    svg += "<rect x='" + std::to_string(kPad) + "' y='" + std::to_string(kPad) + "' width='" +
           std::to_string(kW - 2 * kPad) + "' height='" + std::to_string(kH - 2 * kPad) +
           "' fill='none' stroke='#999'/>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        std::string pts;
        for (std::size_t i = 0; i < x.size() && i < series[s].size(); ++i) {
            if (!std::isfinite(series[s][i])) continue;
            double px = kPad + xr.to_unit(x[i]) * (kW - 2 * kPad);
            double py = kH - kPad - yr.to_unit(series[s][i]) * (kH - 2 * kPad);
            pts += fmt_coord(px) + "," + fmt_coord(py) + " ";
        }
        const char* color = kSeriesColors[s % 6];
        svg += "<polyline fill='none' stroke='" + std::string(color) + "' stroke-width='1.5' points='" + pts +
               "'/>\n";
        if (s < labels.size()) {
            svg += "<text x='" + std::to_string(kW - kPad - 150) + "' y='" + std::to_string(kPad + 16 * (s + 1)) +
                   "' font-size='12' fill='" + color + "'>" + labels[s] + "</text>\n";
        }
    }
    svg += "<text x='" + std::to_string(kW / 2) + "' y='" + std::to_string(kH - 12) +
           "' text-anchor='middle' font-size='11'>" + format_double(xr.lo) + " .. " + format_double(xr.hi) +
           "</text>\n</svg>\n";
    return svg;
}

std::string svg_heatmap(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<std::vector<double>>& values, const std::string& title) {
    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const auto& row : values) {
        for (double v : row) {
            if (!std::isfinite(v)) continue;
            if (first) {
                lo = hi = v;
                first = false;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi == lo) hi = lo + 1.0;

    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(kW) + "' height='" +
                      std::to_string(kH) + "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    svg += "<text x='" + std::to_string(kW / 2) + "' y='20' text-anchor='middle' font-size='14'>" + title +
           "</text>\n";
    const double cw = static_cast<double>(kW - 2 * kPad) / static_cast<double>(xs.size());
    const double ch = static_cast<double>(kH - 2 * kPad) / static_cast<double>(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            double v = values[i][j];
            std::string fill = "#cccccc";  // out-of-range marker
            if (std::isfinite(v)) {
                // log-ish ramp from deep blue (low) to red (high)
                double u = (v - lo) / (hi - lo);
                int r = static_cast<int>(255 * u);
                int b = static_cast<int>(255 * (1.0 - u));
                fill = "rgb(" + std::to_string(r) + ",80," + std::to_string(b) + ")";
            }
            double px = kPad + static_cast<double>(i) * cw;
            double py = kH - kPad - static_cast<double>(j + 1) * ch;
            svg += "<rect x='" + fmt_coord(px) + "' y='" + fmt_coord(py) + "' width='" + fmt_coord(cw + 0.5) +
                   "' height='" + fmt_coord(ch + 0.5) + "' fill='" + fill + "'/>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace walab
