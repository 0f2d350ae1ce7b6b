#include "teachsim/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "teachsim/errors.hpp"

namespace teachsim {

namespace {

constexpr const char* kHeader =
    "iteration,objective,param_dist,test_accuracy,teaching_samples,query_samples";
constexpr const char* kColumns[] = {"iteration",     "objective",        "param_dist",
                                    "test_accuracy", "teaching_samples", "query_samples"};

template <class T>
T parse_cell(const std::string& cell, long line, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("line " + std::to_string(line) + ", column '" + column + "': bad value '" +
                         cell + "'",
                     line, column);
  }
  return value;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_trace(const Trace& trace) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const TraceRow& r : trace.rows) {
    os << r.iteration << ',' << format_double(r.objective) << ',' << format_double(r.param_dist)
       << ',';
    if (r.test_accuracy) os << format_double(*r.test_accuracy);
    os << ',' << r.teaching_samples << ',' << r.query_samples << '\n';
  }
  return os.str();
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << format_trace(trace);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' is empty", 1, "");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw ParseError("unexpected trace header in '" + path.string() + "'", 1, "");
  Trace trace;
  trace.teacher = path.stem().string();
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 6) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 6 fields", line_no, "");
    }
    TraceRow r;
    r.iteration = parse_cell<std::int64_t>(cells[0], line_no, kColumns[0]);
    r.objective = parse_cell<double>(cells[1], line_no, kColumns[1]);
    r.param_dist = parse_cell<double>(cells[2], line_no, kColumns[2]);
    if (!cells[3].empty()) r.test_accuracy = parse_cell<double>(cells[3], line_no, kColumns[3]);
    r.teaching_samples = parse_cell<std::int64_t>(cells[4], line_no, kColumns[4]);
    r.query_samples = parse_cell<std::int64_t>(cells[5], line_no, kColumns[5]);
    trace.rows.push_back(r);
  }
  return trace;
}

}  // namespace teachsim
