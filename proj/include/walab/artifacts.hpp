#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "walab/numerics.hpp"

namespace walab {

// Shortest round-trip decimal form (std::to_chars); the reason rerun artifacts
// compare byte-identical.
std::string format_double(double v);

// Minimal CSV assembly: one '#' schema/version comment line, a header row,
// then data rows. Numeric cells go through format_double.
class CsvBuilder {
  public:
    CsvBuilder(const std::string& schema_comment, const std::vector<std::string>& columns);

    void add_row(const std::vector<std::string>& cells);
    std::string str() const { return text_; }

    static std::string cell(double v) { return format_double(v); }
    static std::string cell(std::int64_t v) { return std::to_string(v); }
    static std::string cell(std::uint64_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }

  private:
    std::string text_;
    std::size_t n_cols_;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void ensure_dir(const std::string& path);

// Checkpoint file: one-line JSON header (format tag, parameter count, step,
// arbitrary metadata) terminated by '\n', then count little-endian IEEE-754
// doubles. Round-trips bit-exactly.
void write_checkpoint(const std::string& path, const nlohmann::json& meta, const Vec64& params);

struct Checkpoint {
    nlohmann::json meta;
    Vec64 params;
};

Checkpoint read_checkpoint(const std::string& path);

// Plot-ready static SVG renderings (no interactive UI).
std::string svg_line_plot(const std::vector<double>& x, const std::vector<std::vector<double>>& series,
                          const std::vector<std::string>& labels, const std::string& title);
std::string svg_heatmap(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<std::vector<double>>& values, const std::string& title);

}  // namespace walab
