#include "rankml/tabular.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rankml/error.hpp"
#include "rankml/rng.hpp"

namespace rankml {
namespace {

constexpr std::array<std::string_view, 3> kMissingMarkers = {"", "NA", "?"};

bool is_missing_marker(std::string_view s) {
  return std::find(kMissingMarkers.begin(), kMissingMarkers.end(), s) !=
         kMissingMarkers.end();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_finite_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);  // from_chars rejects a leading '+'
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct RawCell {
  std::string text;
  bool quoted = false;
};

// RFC-4180-style reader: quoted fields may contain commas, doubled quotes and
// newlines. Unquoted fields are trimmed of surrounding spaces/tabs.
std::vector<std::vector<RawCell>> parse_csv(const std::string& text,
                                            const std::string& where) {
  std::vector<std::vector<RawCell>> rows;
  std::vector<RawCell> row;
  RawCell cell;
  bool in_quotes = false;
  bool cell_started = false;
  std::size_t line = 1;

  auto end_cell = [&] {
    if (!cell.quoted) cell.text = std::string(trim(cell.text));
    row.push_back(std::move(cell));
    cell = RawCell{};
    cell_started = false;
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell.text.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!cell_started && cell.text.empty()) {
          in_quotes = true;
          cell.quoted = true;
          cell_started = true;
        } else {
          cell.text.push_back(c);  // stray quote mid-field, keep verbatim
        }
        break;
      case ',':
        end_cell();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        cell.text.push_back(c);
        cell_started = true;
    }
  }
  if (in_quotes)
    throw Error(where + ": unterminated quoted field at line " + std::to_string(line));
  if (cell_started || !cell.text.empty() || !row.empty()) end_row();
  return rows;
}

void write_csv_field(std::ostream& out, std::string_view s) {
  bool needs_quotes =
      s.find_first_of(",\"\n\r") != std::string_view::npos ||
      (!s.empty() && (s != trim(s)));
  if (!needs_quotes) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

std::string_view task_name(Task t) {
  return t == Task::classification ? "classification" : "regression";
}

Task task_from_name(std::string_view name) {
  if (name == "classification") return Task::classification;
  if (name == "regression") return Task::regression;
  throw Error("unknown task '" + std::string(name) +
              "' (expected classification or regression)");
}

std::size_t Column::missing_count() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < size(); ++r)
    if (is_missing(r)) ++n;
  return n;
}

bool same_content(const TabularDataset& a, const TabularDataset& b) {
  return a.task == b.task && a.n_rows == b.n_rows &&
         a.target_index == b.target_index && a.columns == b.columns;
}

TabularDataset load_dataset(const std::filesystem::path& path,
                            const std::string& target, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  auto rows = parse_csv(text, path.string());
  if (rows.empty()) throw Error(path.string() + ": empty file (no header row)");

  const auto& header = rows.front();
  const std::size_t n_cols = header.size();
  const std::size_t n_rows = rows.size() - 1;
  if (n_rows == 0) throw Error(path.string() + ": zero data rows");

  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != n_cols)
      throw Error(path.string() + ": row " + std::to_string(r) + " has " +
                  std::to_string(rows[r].size()) + " fields, expected " +
                  std::to_string(n_cols));
  }

  std::size_t target_index = n_cols;
  for (std::size_t c = 0; c < n_cols; ++c)
    if (header[c].text == target) target_index = c;
  if (target_index == n_cols)
    throw Error(path.string() + ": target column '" + target + "' not found");

  TabularDataset d;
  d.name = path.stem().string();
  d.n_rows = n_rows;
  d.target_index = target_index;
  d.task = task;
  d.columns.resize(n_cols);

  for (std::size_t c = 0; c < n_cols; ++c) {
    Column& col = d.columns[c];
    col.name = header[c].text;

    bool all_numeric = true;
    std::vector<std::optional<double>> numbers(n_rows);
    std::vector<std::optional<std::string>> labels(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const std::string& cell = rows[r + 1][c].text;
      if (is_missing_marker(cell)) continue;
      labels[r] = cell;
      if (all_numeric) {
        if (auto v = parse_finite_double(cell)) {
          numbers[r] = *v;
        } else {
          all_numeric = false;
        }
      }
    }

    if (all_numeric) {
      col.kind = ColumnKind::numeric;
      col.numbers = std::move(numbers);
    } else {
      col.kind = ColumnKind::categorical;
      col.labels = std::move(labels);
    }
  }

  const Column& tcol = d.target();
  if (tcol.missing_count() > 0)
    throw Error(path.string() + ": target column '" + target +
                "' contains missing cells");
  if (task == Task::classification && tcol.kind != ColumnKind::categorical)
    throw Error(path.string() + ": task is classification but target column '" +
                target + "' is numeric");
  if (task == Task::regression && tcol.kind != ColumnKind::numeric)
    throw Error(path.string() + ": task is regression but target column '" +
                target + "' is categorical");
  return d;
}

void save_dataset(const TabularDataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file: " + path.string());
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    if (c) out << ',';
    write_csv_field(out, d.columns[c].name);
  }
  out << '\n';
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
      if (c) out << ',';
      const Column& col = d.columns[c];
      if (col.is_missing(r)) continue;
      if (col.kind == ColumnKind::numeric) {
        out << format_double(*col.numbers[r]);
      } else {
        write_csv_field(out, *col.labels[r]);
      }
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

TabularDataset select_rows(const TabularDataset& d,
                           const std::vector<std::size_t>& rows,
                           std::string name) {
  TabularDataset out;
  out.name = std::move(name);
  out.n_rows = rows.size();
  out.target_index = d.target_index;
  out.task = d.task;
  out.columns.reserve(d.columns.size());
  for (const Column& col : d.columns) {
    Column sub;
    sub.name = col.name;
    sub.kind = col.kind;
    if (col.kind == ColumnKind::numeric) {
      sub.numbers.reserve(rows.size());
      for (std::size_t r : rows) sub.numbers.push_back(col.numbers[r]);
    } else {
      sub.labels.reserve(rows.size());
      for (std::size_t r : rows) sub.labels.push_back(col.labels[r]);
    }
    out.columns.push_back(std::move(sub));
  }
  return out;
}

std::pair<TabularDataset, TabularDataset> split_train_test(
    const TabularDataset& d, double ratio, std::uint64_t seed) {
  if (d.n_rows < 2) throw Error("split_train_test: dataset has fewer than 2 rows");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw Error("split_train_test: ratio must be in (0, 1)");

  std::size_t train_n =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(d.n_rows)));
  train_n = std::clamp<std::size_t>(train_n, 1, d.n_rows - 1);

  auto order = shuffled_indices(d.n_rows, seed);
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + train_n);
  std::vector<std::size_t> test_rows(order.begin() + train_n, order.end());
  return {select_rows(d, train_rows, d.name + "-train"),
          select_rows(d, test_rows, d.name + "-test")};
}

}  // namespace rankml
