// Flat `key = value` configuration files.
//
// One assignment per line, `#` starts a comment, SI base units throughout
// (Hz, s, W, F). Unknown keys are rejected. See README.md for the key list.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "core.hpp"

namespace omc {

namespace config_detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& text)
{
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        fail(ErrorKind::config, "config: key '" + key + "' expects a number, got '" + text + "'");
    return v;
}

inline long long to_integer(const std::string& key, const std::string& text)
{
    // accept 1e7-style integers too
    const double v = to_double(key, text);
    if (v != std::floor(v) || v < 0 || v > 9.0e18)
        fail(ErrorKind::config, "config: key '" + key + "' expects a non-negative integer");
    return static_cast<long long>(v);
}

inline Side to_side(const std::string& key, const std::string& text)
{
    if (text == "red")
        return Side::red;
    if (text == "blue")
        return Side::blue;
    fail(ErrorKind::config, "config: key '" + key + "' expects red|blue, got '" + text + "'");
}

inline PulseLabel to_label(const std::string& key, const std::string& text)
{
    if (text == "write")
        return PulseLabel::write;
    if (text == "read")
        return PulseLabel::read;
    if (text == "other")
        return PulseLabel::other;
    fail(ErrorKind::config, "config: key '" + key + "' expects write|read|other, got '" + text + "'");
}

// p_s:A:n_instant, comma separated
inline std::vector<HeatingCalibrationPoint> to_calibration(const std::string& key, const std::string& text)
{
    std::vector<HeatingCalibrationPoint> out;
    std::stringstream list(text);
    std::string item;
    while (std::getline(list, item, ',')) {
        item = trim(item);
        if (item.empty())
            continue;
        std::stringstream fields(item);
        std::string a, b, c;
        if (!std::getline(fields, a, ':') || !std::getline(fields, b, ':') || !std::getline(fields, c))
            fail(ErrorKind::config, "config: key '" + key + "' expects p_s:A:n_instant entries");
        out.push_back({to_double(key, trim(a)), to_double(key, trim(b)), to_double(key, trim(c))});
    }
    return out;
}

inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace config_detail

/// Parses configuration text. Throws Error{config} on malformed input and
/// Error{validation} when a domain invariant is violated.
inline ExperimentConfig parse_config(std::string_view text)
{
    using namespace config_detail;

    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::config, "config: line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty())
            fail(ErrorKind::config, "config: line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            fail(ErrorKind::config, "config: duplicate key '" + key + "'");
    }

    ExperimentConfig cfg;
    std::map<int, Pulse> pulses;
    double f_c = cfg.cavity.f_c().hz, kappa = cfg.cavity.kappa().hz, kappa_i = cfg.cavity.kappa_i().hz;
    std::optional<double> kappa_e;
    bool eta_dev_set = false;

    for (const auto& [key, value] : kv) {
        auto num = [&] { return to_double(key, value); };
        if (key == "cavity.f_c") f_c = num();
        else if (key == "cavity.kappa") kappa = num();
        else if (key == "cavity.kappa_i") kappa_i = num();
        else if (key == "cavity.kappa_e") kappa_e = num();
        else if (key == "mode.f_m") cfg.mode.f_m = Frequency(num());
        else if (key == "mode.gamma_m") cfg.mode.gamma_m = Frequency(num());
        else if (key == "mode.n_baseline") cfg.mode.n_baseline = num();
        else if (key == "heating.amplitude_per_ps") cfg.mode.heating.amplitude_per_ps = num();
        else if (key == "heating.tau_rise") cfg.mode.heating.tau_rise = num();
        else if (key == "heating.tau_decay") cfg.mode.heating.tau_decay = num();
        else if (key == "heating.n_instant") cfg.mode.heating.n_instant = num();
        else if (key == "heating.calibration") cfg.mode.heating.calibration = to_calibration(key, value);
        else if (key == "optomech.g0") cfg.g0 = Frequency(num());
        else if (key == "detection.eta_dev") { cfg.detection.eta_dev = num(); eta_dev_set = true; }
        else if (key == "detection.eta_fc") cfg.detection.eta_fc = num();
        else if (key == "detection.eta_rest") cfg.detection.eta_rest = num();
        else if (key == "detection.dark_rate") cfg.detection.dark_rate = num();
        else if (key == "detection.filter_suppression_db") cfg.detection.filter_suppression_db = num();
        else if (key == "sequence.repetition_rate") cfg.sequence.repetition_rate = num();
        else if (key == "sequence.n_sequences") cfg.sequence.n_sequences = to_integer(key, value);
        else if (key == "transducer.f_s") cfg.piezo.f_s = Frequency(num());
        else if (key == "transducer.f_p") cfg.piezo.f_p = Frequency(num());
        else if (key == "transducer.k_eff2") cfg.piezo.k_eff2 = num();
        else if (key == "transducer.c_piezo") cfg.piezo.c_piezo = num();
        else if (key == "transducer.c_parasitic") cfg.piezo.c_parasitic = num();
        else if (key == "transducer.gamma_m") cfg.piezo.gamma_m = Frequency(num());
        else if (key == "transducer.f_m") cfg.piezo.f_m = Frequency(num());
        else if (key == "transducer.q_uw") cfg.piezo.q_uw = num();
        else if (key == "transducer.n_m") cfg.piezo.n_m = num();
        else if (key == "transducer.eta_e") cfg.piezo.eta_e = num();
        else if (key.rfind("pulse.", 0) == 0) {
            const auto dot = key.find('.', 6);
            if (dot == std::string::npos)
                fail(ErrorKind::config, "config: malformed pulse key '" + key + "'");
            const std::string idx_text = key.substr(6, dot - 6);
            const int idx = static_cast<int>(to_integer(key, idx_text));
            const std::string field = key.substr(dot + 1);
            Pulse& p = pulses[idx];
            if (field == "label") p.label = to_label(key, value);
            else if (field == "side") p.side = to_side(key, value);
            else if (field == "start") p.start = num();
            else if (field == "duration") p.duration = num();
            else if (field == "peak_power") p.peak_power = num();
            else if (field == "window_offset") p.window_offset = num();
            else if (field == "window") p.window_length = num();
            else fail(ErrorKind::config, "config: unknown pulse field '" + key + "'");
        }
        else
            fail(ErrorKind::config, "config: unknown key '" + key + "'");
    }

    int expected = 0;
    for (auto& [idx, p] : pulses) {
        if (idx != expected++)
            fail(ErrorKind::config, "config: pulse indices must be contiguous from 0");
        cfg.sequence.pulses.push_back(p);
    }

    cfg.cavity = OpticalCavity(Frequency(f_c), Frequency(kappa), Frequency(kappa_i),
                               Frequency(kappa_e.value_or(kappa - kappa_i)));
    if (!eta_dev_set)
        cfg.detection.eta_dev = cfg.cavity.kappa_e().hz / cfg.cavity.kappa().hz;
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        fail(ErrorKind::io, "config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

/// Canonical text form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c)
{
    using config_detail::fmt;
    std::ostringstream o;
    o << "cavity.f_c = " << fmt(c.cavity.f_c().hz) << '\n'
      << "cavity.kappa = " << fmt(c.cavity.kappa().hz) << '\n'
      << "cavity.kappa_i = " << fmt(c.cavity.kappa_i().hz) << '\n'
      << "cavity.kappa_e = " << fmt(c.cavity.kappa_e().hz) << '\n'
      << "mode.f_m = " << fmt(c.mode.f_m.hz) << '\n'
      << "mode.gamma_m = " << fmt(c.mode.gamma_m.hz) << '\n'
      << "mode.n_baseline = " << fmt(c.mode.n_baseline) << '\n'
      << "heating.amplitude_per_ps = " << fmt(c.mode.heating.amplitude_per_ps) << '\n'
      << "heating.tau_rise = " << fmt(c.mode.heating.tau_rise) << '\n'
      << "heating.tau_decay = " << fmt(c.mode.heating.tau_decay) << '\n'
      << "heating.n_instant = " << fmt(c.mode.heating.n_instant) << '\n';
    if (!c.mode.heating.calibration.empty()) {
        o << "heating.calibration = ";
        for (std::size_t i = 0; i < c.mode.heating.calibration.size(); ++i) {
            const auto& pt = c.mode.heating.calibration[i];
            o << (i ? ", " : "") << fmt(pt.p_s) << ':' << fmt(pt.amplitude) << ':' << fmt(pt.n_instant);
        }
        o << '\n';
    }
    o << "optomech.g0 = " << fmt(c.g0.hz) << '\n'
      << "detection.eta_dev = " << fmt(c.detection.eta_dev) << '\n'
      << "detection.eta_fc = " << fmt(c.detection.eta_fc) << '\n'
      << "detection.eta_rest = " << fmt(c.detection.eta_rest) << '\n'
      << "detection.dark_rate = " << fmt(c.detection.dark_rate) << '\n';
    if (c.detection.filter_suppression_db)
        o << "detection.filter_suppression_db = " << fmt(*c.detection.filter_suppression_db) << '\n';
    o << "sequence.repetition_rate = " << fmt(c.sequence.repetition_rate) << '\n'
      << "sequence.n_sequences = " << c.sequence.n_sequences << '\n';
    for (std::size_t i = 0; i < c.sequence.pulses.size(); ++i) {
        const Pulse& p = c.sequence.pulses[i];
        const std::string k = "pulse." + std::to_string(i) + ".";
        o << k << "label = " << to_string(p.label) << '\n'
          << k << "side = " << to_string(p.side) << '\n'
          << k << "start = " << fmt(p.start) << '\n'
          << k << "duration = " << fmt(p.duration) << '\n'
          << k << "peak_power = " << fmt(p.peak_power) << '\n'
          << k << "window_offset = " << fmt(p.window_offset) << '\n';
        if (p.window_length)
            o << k << "window = " << fmt(*p.window_length) << '\n';
    }
    o << "transducer.f_s = " << fmt(c.piezo.f_s.hz) << '\n'
      << "transducer.f_p = " << fmt(c.piezo.f_p.hz) << '\n';
    if (c.piezo.k_eff2)
        o << "transducer.k_eff2 = " << fmt(*c.piezo.k_eff2) << '\n';
    o << "transducer.c_piezo = " << fmt(c.piezo.c_piezo) << '\n'
      << "transducer.c_parasitic = " << fmt(c.piezo.c_parasitic) << '\n'
      << "transducer.gamma_m = " << fmt(c.piezo.gamma_m.hz) << '\n'
      << "transducer.f_m = " << fmt(c.piezo.f_m.hz) << '\n'
      << "transducer.q_uw = " << fmt(c.piezo.q_uw) << '\n'
      << "transducer.n_m = " << fmt(c.piezo.n_m) << '\n'
      << "transducer.eta_e = " << fmt(c.piezo.eta_e) << '\n';
    return o.str();
}

/// FNV-1a over the canonical serialization, used to tag artifacts.
inline std::uint64_t config_hash(const ExperimentConfig& c)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : serialize_config(c)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace omc
