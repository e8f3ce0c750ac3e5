#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace evolab::cli {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line chart. With `log_y`, nonpositive values are dropped.
void write_line_plot(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series, bool log_y);

}  // namespace evolab::cli
