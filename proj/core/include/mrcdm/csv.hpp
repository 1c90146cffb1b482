#pragma once

#include <string>
#include <vector>

#include "mrcdm/timeseries.hpp"

namespace mrcdm {

/// Locale-independent shortest round-trip formatting ('.' decimal point).
std::string format_double(double x);

/// Reads one feature column from an ETT-format CSV: header row, first column
/// a timestamp, remaining columns features. Missing cells (empty or "NaN",
/// any case) become unobserved samples.
TimeSeries read_ett_csv(const std::string& path, const std::string& column);

/// Writes one or more series as an ETT-format CSV with hourly timestamps
/// starting at 2016-07-01T00:00:00. All series must have equal length.
void write_ett_csv(const std::string& path, const std::vector<TimeSeries>& series,
                   const std::vector<std::string>& column_names);

/// Writes a generic CSV with a header; rows of pre-formatted cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace mrcdm
