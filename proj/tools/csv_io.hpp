#ifndef STREAMFORGE_TOOLS_CSV_IO_HPP
#define STREAMFORGE_TOOLS_CSV_IO_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "streamforge/error.hpp"
#include "streamforge/exec_grid.hpp"
#include "streamforge/fisher.hpp"
#include "streamforge/grf.hpp"

namespace streamforge::cli {

inline std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(std::string_view line)
{
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return fields;
}

/// Non-blank lines of a text file, split on commas.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::io_failure, "cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty())
      rows.push_back(split_csv_line(line));
  return rows;
}

inline ContingencyTable read_table_csv(const std::filesystem::path& path)
{
  const auto rows = read_csv(path);
  if (rows.empty())
    throw Error(Errc::invalid_argument, path.string() + ": empty table");
  std::vector<std::vector<Count>> values;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size())
      throw Error(Errc::invalid_argument, path.string() + ": row " + std::to_string(r + 1) +
                                              " has " + std::to_string(rows[r].size()) +
                                              " fields, expected " +
                                              std::to_string(rows.front().size()));
    std::vector<Count> row;
    for (const auto& field : rows[r]) {
      Count v = 0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw Error(Errc::invalid_argument,
                    path.string() + ": '" + field + "' is not an integer");
      row.push_back(v);
    }
    values.push_back(std::move(row));
  }
  return ContingencyTable::from_rows(values);
}

inline constexpr const char* params_columns[] = {"shape", "range", "variance", "anisoRatio",
                                                 "anisoAngleRadians"};

/// Header row names the columns; order is free and extra columns are ignored.
inline std::vector<MaternParams> read_params_csv(const std::filesystem::path& path)
{
  const auto rows = read_csv(path);
  if (rows.empty())
    throw Error(Errc::invalid_params, path.string() + ": missing header");
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < rows[0].size(); ++c)
    index[rows[0][c]] = c;
  std::size_t col[5];
  for (int k = 0; k < 5; ++k) {
    const auto it = index.find(params_columns[k]);
    if (it == index.end())
      throw Error(Errc::invalid_params,
                  path.string() + ": missing column '" + params_columns[k] + "'");
    col[k] = it->second;
  }
  if (rows.size() < 2)
    throw Error(Errc::invalid_params, path.string() + ": no parameter rows");

  std::vector<MaternParams> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw Error(Errc::invalid_params, path.string() + ": row " + std::to_string(r + 1) +
                                            " does not match the header width");
    double v[5];
    for (int k = 0; k < 5; ++k) {
      const std::string& field = rows[r][col[k]];
      std::size_t used = 0;
      try {
        v[k] = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (field.empty() || used != field.size())
        throw Error(Errc::invalid_params, path.string() + ": '" + field + "' in column '" +
                                              params_columns[k] + "' is not a number");
    }
    MaternParams p{v[0], v[1], v[2], v[3], v[4]};
    p.validate();
    out.push_back(p);
  }
  return out;
}

/// Shortest form that round-trips a double (17 significant digits).
inline std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
void write_matrix_csv(std::ostream& os, const MatrixBuffer<T>& m)
{
  for (std::size_t r = 0; r < m.nrow; ++r) {
    for (std::size_t c = 0; c < m.ncol; ++c) {
      if (c)
        os << ',';
      if constexpr (std::is_floating_point_v<T>)
        os << format_double(m(r, c));
      else
        os << m(r, c);
    }
    os << '\n';
  }
}

} // namespace streamforge::cli

#endif // STREAMFORGE_TOOLS_CSV_IO_HPP
