#include "dcast/datapipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include "dcast/errors.hpp"

namespace dcast::data {

namespace {

bool is_missing(double v) { return std::isnan(v); }

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

bool TimeSeries::has_missing() const {
  for (double v : values)
    if (is_missing(v)) return true;
  return false;
}

SplitSpec SplitSpec::tail(std::size_t length, std::size_t horizon, std::size_t validation) {
  if (length <= horizon + validation)
    throw ConfigError("series of length " + std::to_string(length) +
                      " cannot hold validation " + std::to_string(validation) + " + horizon " +
                      std::to_string(horizon));
  SplitSpec s;
  s.test_end = length;
  s.val_end = length - horizon;
  s.train_end = s.val_end - validation;
  s.horizon = horizon;
  s.validate();
  return s;
}

void SplitSpec::validate() const {
  if (!(train_end < val_end && val_end < test_end))
    throw ConfigError("split boundaries must be strictly increasing");
  if (test_end - val_end != horizon)
    throw ConfigError("test length must equal the forecast horizon");
}

std::int64_t parse_date(const std::string& text) {
  // strict YYYY-MM-DD
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw ParseError("bad date '" + text + "'");
  auto digits = [&](std::size_t from, std::size_t n) {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) {
      if (text[i] < '0' || text[i] > '9') throw ParseError("bad date '" + text + "'");
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  int y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (m < 1 || m > 12 || d < 1 || d > 31) throw ParseError("bad date '" + text + "'");
  // days_from_civil (Howard Hinnant's algorithm)
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::vector<TimeSeries> load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset " + path);

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ParseError(path + " is empty");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (trim(line) != "series_id,date,value")
    throw ParseError(path + ": expected header 'series_id,date,value', got '" + line + "'");

  struct Row {
    std::int64_t day;
    double value;
  };
  std::vector<std::string> id_order;
  std::map<std::string, std::vector<Row>> rows;

  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto where = path + " line " + std::to_string(lineno);
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ParseError(where + ": expected 3 comma-separated fields");
    const std::string id = trim(line.substr(0, c1));
    const std::string date = trim(line.substr(c1 + 1, c2 - c1 - 1));
    const std::string value = trim(line.substr(c2 + 1));
    if (id.empty()) throw ParseError(where + ": empty series_id");

    std::int64_t day;
    try {
      day = parse_date(date);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }

    double v;
    if (value.empty()) {
      v = std::nan("");
    } else {
      char* end = nullptr;
      const long long n = std::strtoll(value.c_str(), &end, 10);
      if (end == value.c_str() || *end != '\0')
        throw ParseError(where + ": value '" + value + "' is not a non-negative integer");
      if (n < 0) throw ParseError(where + ": negative value " + value);
      v = static_cast<double>(n);
    }

    auto it = rows.find(id);
    if (it == rows.end()) {
      id_order.push_back(id);
      it = rows.emplace(id, std::vector<Row>{}).first;
    }
    it->second.push_back({day, v});
  }
  if (id_order.empty()) throw ParseError(path + " holds no data rows");

  std::vector<TimeSeries> out;
  out.reserve(id_order.size());
  for (const auto& id : id_order) {
    auto& r = rows[id];
    std::sort(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.day < b.day; });
    for (std::size_t i = 1; i < r.size(); ++i)
      if (r[i].day == r[i - 1].day)
        throw ParseError(path + ": duplicate date for series '" + id + "'");
    TimeSeries s;
    s.series_id = id;
    const std::int64_t first = r.front().day, last = r.back().day;
    s.values.assign(static_cast<std::size_t>(last - first + 1), std::nan(""));
    for (const auto& row : r) s.values[static_cast<std::size_t>(row.day - first)] = row.value;
    out.push_back(std::move(s));
  }
  return out;
}

void fill_missing(TimeSeries& s) {
  for (double& v : s.values)
    if (is_missing(v)) v = 0.0;
}

void preprocess(TimeSeries& s, std::size_t stat_end) {
  if (s.preprocessed) throw std::logic_error("preprocess called twice on " + s.series_id);
  if (s.has_missing())
    throw std::logic_error("preprocess before fill_missing on " + s.series_id);
  if (s.values.empty()) throw ConfigError("preprocess: empty series " + s.series_id);
  const std::size_t n = std::min(stat_end, s.values.size());
  if (n == 0) throw ConfigError("preprocess: empty stat region on " + s.series_id);

  double sum = 0.0, lo = s.values[0];
  for (std::size_t i = 0; i < n; ++i) {
    sum += s.values[i];
    lo = std::min(lo, s.values[i]);
  }
  double mean = sum / static_cast<double>(n);
  if (mean == 0.0) mean = 1.0;  // all-zero region: forecast zeros rather than divide by zero
  s.mean_scale = mean;
  s.zero_adjusted = lo <= 0.0;

  for (double& v : s.values) {
    const double scaled = v / s.mean_scale;
    const double arg = s.zero_adjusted ? scaled + 1.0 : scaled;
    if (!(arg > 0.0))
      throw NumericError("preprocess: log of non-positive value in " + s.series_id);
    v = std::log(arg);
  }
  s.preprocessed = true;
}

std::vector<WindowSample> make_windows(const TimeSeries& s, std::size_t window,
                                       std::size_t target_lo, std::size_t target_hi,
                                       std::size_t series_index) {
  std::vector<WindowSample> out;
  const std::size_t lo = std::max(target_lo, window);
  const std::size_t hi = std::min(target_hi, s.values.size());
  for (std::size_t t = lo; t < hi; ++t) {
    WindowSample w;
    w.window.assign(s.values.begin() + static_cast<std::ptrdiff_t>(t - window),
                    s.values.begin() + static_cast<std::ptrdiff_t>(t));
    w.target = s.values[t];
    w.series_index = series_index;
    w.target_index = t;
    out.push_back(std::move(w));
  }
  if (out.empty())
    std::cerr << "warning: series " << s.series_id << " yields no windows for targets ["
              << target_lo << "," << target_hi << ")\n";
  return out;
}

long long postprocess_value(double w, const TimeSeries& meta, RoundMode mode) {
  double v = std::exp(w);
  if (meta.zero_adjusted) v -= 1.0;
  v *= meta.mean_scale;
  v = mode == RoundMode::Ceil ? std::ceil(v) : std::round(v);
  if (v < 0.0) v = 0.0;
  return static_cast<long long>(v);
}

std::vector<long long> postprocess_series(const std::vector<double>& w, const TimeSeries& meta,
                                          RoundMode mode) {
  std::vector<long long> out;
  out.reserve(w.size());
  for (double x : w) out.push_back(postprocess_value(x, meta, mode));
  return out;
}

}  // namespace dcast::data
