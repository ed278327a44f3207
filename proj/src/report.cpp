#include "uturnlab/lab/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uturnlab::lab {

std::string format_number(double value) {
  char buffer[40];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return {buffer, ptr};
}

std::string format_integer(std::int64_t value) {
  char buffer[24];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "0";
  return {buffer, ptr};
}

void Table::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out << ',';
    out << columns[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
}

Table& ExperimentReport::table(const std::string& name, std::vector<std::string> columns) {
  auto [it, inserted] = tables_.try_emplace(name);
  if (inserted) it->second.columns = std::move(columns);
  return it->second;
}

const Table* ExperimentReport::find_table(const std::string& name) const {
  auto it = tables_.find(name);
  return it == tables_.end() ? nullptr : &it->second;
}

void ExperimentReport::add_flag(const std::string& name, bool passed, double observed,
                                double threshold, const std::string& note) {
  flags_.push_back({name, passed, observed, threshold, note});
}

void ExperimentReport::set_value(const std::string& name, double value) {
  values_[name] = value;
}

double ExperimentReport::value(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("report value not found: " + name);
  return it->second;
}

const Flag* ExperimentReport::find_flag(const std::string& name) const {
  for (const auto& flag : flags_)
    if (flag.name == name) return &flag;
  return nullptr;
}

bool ExperimentReport::all_passed() const {
  for (const auto& flag : flags_)
    if (!flag.passed) return false;
  return true;
}

nlohmann::json ExperimentReport::to_json(bool include_timing) const {
  nlohmann::json doc;
  doc["experiment"] = experiment;
  doc["config"] = config_echo;
  doc["seed"] = seed;
  doc["rng"] = {{"scheme", "splitmix64 counter"},
                {"substream", "state = master_seed xor mix64((task + 1) * 0x9E3779B97F4A7C15)"}};
  nlohmann::json flags = nlohmann::json::array();
  for (const auto& flag : flags_) {
    flags.push_back({{"name", flag.name},
                     {"passed", flag.passed},
                     {"observed", flag.observed},
                     {"threshold", flag.threshold},
                     {"note", flag.note}});
  }
  doc["flags"] = std::move(flags);
  doc["values"] = values_;
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& [name, table] : tables_)
    tables.push_back({{"name", name}, {"csv", name + ".csv"}, {"rows", table.rows.size()}});
  doc["tables"] = std::move(tables);
  if (include_timing) doc["timing_ms"] = wall_ms;
  return doc;
}

void ExperimentReport::write(const std::filesystem::path& directory) const {
  std::filesystem::create_directories(directory);
  std::ofstream out(directory / "report.json");
  if (!out) throw std::runtime_error("cannot write report.json in " + directory.string());
  out << to_json(true).dump(2) << '\n';
  for (const auto& [name, table] : tables_) table.write_csv(directory / (name + ".csv"));
}

std::string ExperimentReport::summary() const {
  std::ostringstream out;
  for (const auto& flag : flags_) {
    out << (flag.passed ? "PASS " : "FAIL ") << flag.name << ": observed "
        << format_number(flag.observed) << " vs threshold " << format_number(flag.threshold);
    if (!flag.note.empty()) out << " (" << flag.note << ")";
    out << '\n';
  }
  return out.str();
}

}  // namespace uturnlab::lab
