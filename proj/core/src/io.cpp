#include "burgers_ldp/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace burgers_ldp {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& raw, std::size_t line) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("value '" + raw + "' of '" + key + "' is not a number", key, line);
    return v;
}

std::ofstream open_out(const std::string& path, std::ios_base::openmode mode = {}) {
    std::ofstream out(path, mode);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path, std::ios_base::openmode mode = {}) {
    std::ifstream in(path, mode);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

constexpr char kTrajMagic[8] = {'B', 'L', 'D', 'P', 'T', 'R', 'J', '1'};

} // namespace

std::string version_string() { return "burgers-ldp 0.1.0"; }

ConfigError::ConfigError(std::string message, std::string field, std::size_t line)
    : std::runtime_error(line ? message + " (line " + std::to_string(line) + ")"
                              : std::move(message)),
      field_(std::move(field)), line_(line) {}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + line + "'", "", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key before '='", "", lineno);
        if (key.find_first_not_of(
                "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
            std::string::npos)
            throw ConfigError("key '" + key + "' contains unsupported characters", key, lineno);
        if (value.empty()) throw ConfigError("key '" + key + "' has an empty value", key, lineno);
        const auto [it, inserted] = cfg.entries_.emplace(key, Entry{value, lineno});
        if (!inserted)
            throw ConfigError("duplicate key '" + key + "' (first set on line " +
                                  std::to_string(it->second.line) + ")",
                              key, lineno);
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'", "", 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string Config::get_string(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", key, 0);
    return it->second.value;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", key, 0);
    return parse_double(key, it->second.value, it->second.line);
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", key, 0);
    const std::string& raw = it->second.value;
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0' || errno == ERANGE || raw.front() == '-')
        throw ConfigError("value '" + raw + "' of '" + key + "' is not an unsigned integer",
                          key, it->second.line);
    return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", key, 0);
    const std::string& raw = it->second.value;
    if (raw == "true" || raw == "1") return true;
    if (raw == "false" || raw == "0") return false;
    throw ConfigError("value '" + raw + "' of '" + key + "' is not a boolean (true/false/1/0)",
                      key, it->second.line);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", key, 0);
    std::vector<double> out;
    std::istringstream in(it->second.value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError("empty element in list '" + key + "'", key, it->second.line);
        out.push_back(parse_double(key, item, it->second.line));
    }
    if (out.empty()) throw ConfigError("list '" + key + "' is empty", key, it->second.line);
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    entries_[key] = Entry{value, 0};
}

void Config::set_double(const std::string& key, double value) { set(key, fmt_double(value)); }

void Config::set_u64(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [key, entry] : entries_) {
        out += key;
        out += " = ";
        out += entry.value;
        out += '\n';
    }
    return out;
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [key, entry] : entries_) out.push_back(key);
    return out;
}

void write_trajectory_csv(const std::string& path, const TrajectoryPath& traj) {
    traj.validate();
    std::ofstream out = open_out(path);
    const std::size_t n = traj.n_modes();
    out << 't';
    for (std::size_t k = 1; k <= n; ++k) out << ",u_" << k;
    out << '\n';
    for (std::size_t i = 0; i < traj.n_states(); ++i) {
        out << fmt_double(traj.time(i));
        for (std::size_t k = 0; k < n; ++k) out << ',' << fmt_double(traj.states[i].c[k]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

TrajectoryPath read_trajectory_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,", 0) != 0)
        throw std::runtime_error("'" + path + "': missing trajectory CSV header");
    const auto n = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    TrajectoryPath traj;
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ','))
            vals.push_back(parse_double("row", cell, times.size() + 2));
        if (vals.size() != n + 1)
            throw std::runtime_error("'" + path + "': row with " + std::to_string(vals.size()) +
                                     " cells, expected " + std::to_string(n + 1));
        times.push_back(vals.front());
        SpectralField state(n);
        for (std::size_t k = 0; k < n; ++k) state.c[k] = vals[k + 1];
        traj.states.push_back(std::move(state));
    }
    if (times.empty()) throw std::runtime_error("'" + path + "': no states");
    traj.t0 = times.front();
    traj.dt = times.size() > 1 ? times[1] - times[0] : 0.0;
    traj.validate();
    return traj;
}

void write_trajectory_binary(const std::string& path, const TrajectoryPath& traj) {
    traj.validate();
    nlohmann::json header;
    header["format"] = "burgers-ldp trajectory";
    header["version"] = 1;
    header["n_modes"] = traj.n_modes();
    header["n_states"] = traj.n_states();
    header["t0"] = traj.t0;
    header["dt"] = traj.dt;
    const std::string head = header.dump();

    std::ofstream out = open_out(path, std::ios::binary);
    out.write(kTrajMagic, sizeof kTrajMagic);
    const auto head_len = static_cast<std::uint64_t>(head.size());
    out.write(reinterpret_cast<const char*>(&head_len), sizeof head_len);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const SpectralField& s : traj.states)
        out.write(reinterpret_cast<const char*>(s.c.data()),
                  static_cast<std::streamsize>(s.c.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

TrajectoryPath read_trajectory_binary(const std::string& path) {
    std::ifstream in = open_in(path, std::ios::binary);
    char magic[sizeof kTrajMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kTrajMagic, sizeof magic) != 0)
        throw std::runtime_error("'" + path + "': not a trajectory file");
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof head_len);
    if (!in || head_len > (1u << 20))
        throw std::runtime_error("'" + path + "': corrupt header length");
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!in) throw std::runtime_error("'" + path + "': truncated header");

    nlohmann::json header = nlohmann::json::parse(head, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "burgers-ldp trajectory")
        throw std::runtime_error("'" + path + "': unrecognized header");
    const auto n_modes = header.at("n_modes").get<std::size_t>();
    const auto n_states = header.at("n_states").get<std::size_t>();

    TrajectoryPath traj;
    traj.t0 = header.at("t0").get<double>();
    traj.dt = header.at("dt").get<double>();
    traj.states.assign(n_states, SpectralField(n_modes));
    for (SpectralField& s : traj.states) {
        in.read(reinterpret_cast<char*>(s.c.data()),
                static_cast<std::streamsize>(n_modes * sizeof(double)));
        if (!in) throw std::runtime_error("'" + path + "': truncated state data");
    }
    traj.validate();
    return traj;
}

void write_tail_report_csv(const std::string& path, const TailReport& report) {
    std::ofstream out = open_out(path);
    out << "# quantity: " << report.quantity << '\n';
    for (const std::string& note : report.notes) out << "# " << note << '\n';
    out << "epsilon,radius,n_samples,n_hits,p_hat,std_err,diagnostic\n";
    for (const TailRow& row : report.rows) {
        out << fmt_double(row.epsilon) << ',' << fmt_double(row.radius) << ','
            << row.n_samples << ',' << row.n_hits << ',' << fmt_double(row.p_hat) << ','
            << fmt_double(row.std_err) << ',';
        if (row.censored) out << "censored";
        else out << fmt_double(row.diagnostic);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["command"] = command;
    j["status"] = status;
    j["config"] = config_echo;
    j["master_seed"] = master_seed;
    j["n_modes"] = n_modes;
    j["scheme"] = scheme;
    j["start_time"] = start_time;
    j["wall_seconds"] = wall_seconds;
    j["outputs"] = outputs;
    j["notes"] = notes;
    return j.dump(2) + "\n";
}

void RunManifest::write_atomic(const std::string& path) const {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out = open_out(tmp, std::ios::trunc);
        out << to_json();
        if (!out) {
            std::remove(tmp.c_str());
            throw std::runtime_error("write failed on '" + tmp + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot move manifest into place at '" + path + "'");
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace burgers_ldp
