#pragma once

// CSV reading and writing for datasets, bound exports and benchmark metrics.

#include "cdte/bench.hpp"

#include <string>

namespace cdte {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Parses `x1,...,xd,a,y`. Errors name the source and line number.
Dataset parse_dataset_csv(const std::string& text, const std::string& source = "<input>");
Dataset read_dataset_csv(const std::string& path);
std::string dataset_to_csv(const Dataset& data);

std::string metrics_to_csv(const MetricsReport& report);

struct BoundsRow {
    Index row_id;
    double grid_value;
    double lower;
    double upper;
};

std::string bounds_to_csv(const std::vector<BoundsRow>& rows);

std::string read_file(const std::string& path);
/// Throws with the path when the file cannot be written.
void write_file(const std::string& path, const std::string& content);

}  // namespace cdte
