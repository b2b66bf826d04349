#pragma once

// Experiment configuration: an INI file with one section per map, a driving measure, shared
// run settings and one section per command. Every key has a documented default; unknown
// sections and keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/cocycle.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/stationary.hpp"
#include "ergolab/torus.hpp"

namespace ergolab {

/// Malformed or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;  // schema order, defaults filled in
};

class ExperimentConfig {
 public:
  /// Parses and resolves `text`; `command` selects which command section is resolved.
  static ExperimentConfig parse(const std::string& text, const std::string& command);
  static ExperimentConfig load(const std::filesystem::path& path, const std::string& command);

  const std::string& command() const { return command_; }
  const std::string& name() const { return name_; }
  const Family& family() const { return family_; }
  const std::vector<std::string>& map_names() const { return map_names_; }
  const DrivingMeasure& measure() const;
  bool has_measure() const { return measure_.has_value(); }
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }
  void override_seeds(std::vector<std::uint64_t> seeds);

  /// Start point; rational when written as fractions ("1/5 2/5").
  StartPoint start() const;
  TorusPoint start_point() const;

  /// Resolved sections in canonical order: experiment, maps, measure, command.
  const std::vector<ConfigSection>& sections() const { return sections_; }
  std::string canonical_text() const;
  /// FNV-1a 64 of canonical_text(), 16 hex digits.
  std::string hash() const;

  std::string get(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  std::size_t get_size(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
  std::optional<double> get_optional_double(const std::string& section, const std::string& key) const;

  /// The family with every perturbation amplitude replaced by eps.
  Family with_epsilon(double eps) const;

 private:
  std::string command_;
  std::string name_;
  std::vector<std::string> map_names_;
  Family family_;
  std::optional<DrivingMeasure> measure_;
  std::vector<std::uint64_t> seeds_;
  std::vector<ConfigSection> sections_;
};

/// The commands understood by the command line front end.
const std::vector<std::string>& command_names();

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace ergolab
