#pragma once
/// @file
/// Flat key-value configs, trajectory and tail-report serialization, and run
/// manifests.  All text output is locale-independent and floats are printed
/// with 17 significant digits, so identical inputs produce byte-identical
/// files.

#include "burgers_ldp/experiments.hpp"
#include "burgers_ldp/solver.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace burgers_ldp {

/// "burgers-ldp <major>.<minor>.<patch>"
std::string version_string();

/// Parse or lookup failure; the message carries the offending key and, when
/// known, the 1-based line it came from.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string message, std::string field, std::size_t line);

    const std::string& field() const { return field_; }
    std::size_t line() const { return line_; } ///< 0 when not tied to a line

  private:
    std::string field_;
    std::size_t line_;
};

/// Flat dotted-key configuration ("noise.alpha = 0.25").  One `key = value`
/// pair per line; blank lines and lines starting with '#' are skipped;
/// duplicate keys are an error.  Values are stored as raw strings and parsed
/// by the typed getters.
class Config {
  public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;

    /// Typed getters; the no-default forms throw ConfigError when the key is
    /// missing, every form throws when the value does not parse.
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list of doubles.
    std::vector<double> get_double_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_u64(const std::string& key, std::uint64_t value);

    /// One `key = value` line per entry, sorted by key.  parse(serialize())
    /// reproduces the same key-value map.
    std::string serialize() const;

    std::vector<std::string> keys() const;

  private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    std::map<std::string, Entry> entries_;
};

/// CSV with header `t,u_1,...,u_N`, one state per row, %.17g floats.
void write_trajectory_csv(const std::string& path, const TrajectoryPath& traj);
TrajectoryPath read_trajectory_csv(const std::string& path);

/// Compact binary form: an 8-byte magic, a JSON descriptor, then the raw
/// coefficient doubles in state order.
void write_trajectory_binary(const std::string& path, const TrajectoryPath& traj);
TrajectoryPath read_trajectory_binary(const std::string& path);

/// Long-format CSV: `# note` lines, then
/// epsilon,radius,n_samples,n_hits,p_hat,std_err,diagnostic.
/// Censored rows render the diagnostic cell as the word "censored".
void write_tail_report_csv(const std::string& path, const TailReport& report);

/// Provenance record dropped next to every output set, on success and on
/// failure alike.
struct RunManifest {
    std::string version = version_string();
    std::string command;
    std::string status = "ok"; ///< ok | config-error | blow-up | no-convergence
    std::string config_echo;   ///< serialized Config actually used
    std::uint64_t master_seed = 0;
    std::size_t n_modes = 0;
    std::string scheme;
    std::string start_time; ///< UTC, ISO 8601
    double wall_seconds = 0.0;
    std::vector<std::string> outputs;
    std::vector<std::string> notes;

    std::string to_json() const;

    /// Writes to a temporary file in the target directory and renames it into
    /// place, so a manifest is never observed half-written.
    void write_atomic(const std::string& path) const;
};

/// Current UTC wall-clock time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

} // namespace burgers_ldp
