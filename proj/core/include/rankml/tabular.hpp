#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rankml {

enum class Task { classification, regression };

std::string_view task_name(Task t);
Task task_from_name(std::string_view name);  // throws Error on unknown name

enum class ColumnKind { numeric, categorical };

// One typed column. Exactly one of `numbers` / `labels` is populated,
// depending on `kind`; a disengaged optional is a missing cell.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::vector<std::optional<double>> numbers;
  std::vector<std::optional<std::string>> labels;

  std::size_t size() const {
    return kind == ColumnKind::numeric ? numbers.size() : labels.size();
  }
  bool is_missing(std::size_t row) const {
    return kind == ColumnKind::numeric ? !numbers[row].has_value()
                                       : !labels[row].has_value();
  }
  std::size_t missing_count() const;

  bool operator==(const Column&) const = default;
};

// Immutable after load; safe to share across threads.
struct TabularDataset {
  std::string name;
  std::vector<Column> columns;
  std::size_t n_rows = 0;
  std::size_t target_index = 0;
  Task task = Task::classification;

  const Column& target() const { return columns[target_index]; }
  std::size_t feature_count() const { return columns.empty() ? 0 : columns.size() - 1; }
};

// Equality of structure and content; the dataset name (usually the file stem)
// is ignored so that save -> load round trips compare equal.
bool same_content(const TabularDataset& a, const TabularDataset& b);

// Loads a comma-delimited UTF-8 file with a header row.
// Column kinds are inferred: numeric iff every non-missing cell parses as a
// finite real number. Empty cells, "NA" and "?" (case-sensitive) are missing.
// Throws Error on: missing file, unknown target column, missing cells in the
// target, task/target kind mismatch, zero data rows, ragged rows.
TabularDataset load_dataset(const std::filesystem::path& path,
                            const std::string& target, Task task);

// Inverse of load_dataset up to the dataset name. Numeric cells are written
// with shortest round-trip formatting, missing cells as empty fields.
void save_dataset(const TabularDataset& d, const std::filesystem::path& path);

// Row-disjoint (train, test) partition. Train size is floor(ratio * n_rows)
// clamped to [1, n_rows - 1]; the row order is a pure function of the seed.
// Requires 0 < ratio < 1 and n_rows >= 2.
std::pair<TabularDataset, TabularDataset> split_train_test(
    const TabularDataset& d, double ratio, std::uint64_t seed);

// Builds a dataset row-subset in the given row order (shared by the split and
// the synthetic generator's tests).
TabularDataset select_rows(const TabularDataset& d,
                           const std::vector<std::size_t>& rows,
                           std::string name);

}  // namespace rankml
