#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace cachenet {

// Locale-independent, fixed-width-free number formatting for CSV cells.
inline std::string FormatNumber(double x, int precision = 10) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
  return buf;
}

inline std::string JoinCsv(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out.push_back(',');
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      out += cells[i];
      continue;
    }
    out.push_back('"');
    for (char ch : cells[i]) {
      if (ch == '"') out.push_back('"');
      out.push_back(ch);
    }
    out.push_back('"');
  }
  return out;
}

}  // namespace cachenet
