#ifndef UTURNLAB_LAB_REPORT_HPP
#define UTURNLAB_LAB_REPORT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace uturnlab::lab {

// Locale-independent decimal formatting (shortest round-trip form).
std::string format_number(double value);
std::string format_integer(std::int64_t value);

// A CSV-serializable table: header plus pre-formatted cells.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::vector<std::string>& add_row() { return rows.emplace_back(); }
  void write_csv(const std::filesystem::path& path) const;
};

struct Flag {
  std::string name;
  bool passed;
  double observed;
  double threshold;
  std::string note;
};

// Experiment output: echoed config, pass/fail flags against declared
// tolerances, named tables, and the seed that produced everything.  Reports
// are bit-reproducible given (config, seed); only the timing field varies.
class ExperimentReport {
 public:
  std::string experiment;
  nlohmann::json config_echo;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;

  Table& table(const std::string& name, std::vector<std::string> columns);
  const Table* find_table(const std::string& name) const;

  void add_flag(const std::string& name, bool passed, double observed, double threshold,
                const std::string& note = "");
  void set_value(const std::string& name, double value);
  double value(const std::string& name) const;
  const Flag* find_flag(const std::string& name) const;

  bool all_passed() const;
  const std::vector<Flag>& flags() const { return flags_; }

  // Timing is excluded by default so reports compare byte-identical across
  // reruns and worker counts.
  nlohmann::json to_json(bool include_timing = false) const;

  // Writes report.json plus one <table>.csv per table.
  void write(const std::filesystem::path& directory) const;

  // One line per flag, "PASS name: observed ... (threshold ...)".
  std::string summary() const;

 private:
  std::vector<Flag> flags_;
  std::map<std::string, double> values_;
  std::map<std::string, Table> tables_;
};

}  // namespace uturnlab::lab

#endif
