// Artifact files: header line, click-record CSV, count tables and xy data.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "core.hpp"
#include "fit.hpp"
#include "sim.hpp"

namespace omc::io {

inline constexpr const char* toolkit_version = "0.3.0";

struct ArtifactHeader {
    std::string version = toolkit_version;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    long long n_sequences = 0;
};

inline std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string header_line(const ArtifactHeader& h)
{
    return "# omctk " + h.version + " config_hash=" + hex(h.config_hash) + " seed=" + std::to_string(h.seed) +
           " n_sequences=" + std::to_string(h.n_sequences);
}

/// Parses the key=value tokens of a header line; missing keys keep defaults.
inline ArtifactHeader parse_header(const std::string& line)
{
    ArtifactHeader h;
    h.version.clear();
    std::istringstream in(line);
    std::string tok;
    in >> tok;
    require(tok == "#", ErrorKind::io, "artifact header must start with '#'");
    in >> tok;
    require(tok == "omctk", ErrorKind::io, "artifact header does not name the toolkit");
    in >> h.version;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
        try {
            if (k == "config_hash")
                h.config_hash = std::stoull(v, nullptr, 16);
            else if (k == "seed")
                h.seed = std::stoull(v);
            else if (k == "n_sequences")
                h.n_sequences = std::stoll(v);
        } catch (const std::exception&) {
            fail(ErrorKind::io, "artifact header: malformed value for " + k);
        }
    }
    return h;
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline void write_records(std::ostream& os, const sim::RecordSet& rs, const ArtifactHeader& h, bool blind)
{
    os << header_line(h) << '\n';
    os << (blind ? "sequence_index,pulse_label,click_time_ns\n" : "sequence_index,pulse_label,click_time_ns,origin\n");
    for (const auto& r : rs.records) {
        os << r.sequence_index << ',' << to_string(r.pulse_label) << ',' << format_double(r.click_time * 1e9);
        if (!blind)
            os << ',' << sim::to_string(r.origin);
        os << '\n';
    }
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    return os;
}

inline std::ifstream open_in(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        fail(ErrorKind::io, "cannot open '" + path + "' for reading");
    return is;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        out.push_back(config_detail::trim(cell));
    return out;
}

inline double number(const std::string& s, const std::string& where)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size())
            return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::io, where + ": '" + s + "' is not a number");
}

} // namespace detail

struct RecordFile {
    ArtifactHeader header;
    sim::RecordSet records;
    bool has_origin = false;
};

/// Reads a records CSV. n_sequences comes from the header when present,
/// otherwise from the largest sequence index + 1.
inline RecordFile read_records(std::istream& is, const std::string& name = "records")
{
    RecordFile f;
    std::string line;
    bool have_header = false, have_columns = false;
    long long max_seq = -1;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#') {
            if (!have_header && line.rfind("# omctk", 0) == 0) {
                f.header = parse_header(line);
                have_header = true;
            }
            continue;
        }
        const auto cells = detail::split_csv(line);
        const std::string where = name + ":" + std::to_string(lineno);
        if (!have_columns) {
            require(cells.size() >= 3 && cells[0] == "sequence_index" && cells[1] == "pulse_label" &&
                        cells[2] == "click_time_ns",
                    ErrorKind::io, where + ": expected columns sequence_index,pulse_label,click_time_ns[,origin]");
            f.has_origin = cells.size() >= 4 && cells[3] == "origin";
            have_columns = true;
            continue;
        }
        require(cells.size() >= 3, ErrorKind::io, where + ": too few columns");
        sim::TimeTagRecord r;
        r.sequence_index = static_cast<long long>(detail::number(cells[0], where));
        if (cells[1] == "write")
            r.pulse_label = PulseLabel::write;
        else if (cells[1] == "read")
            r.pulse_label = PulseLabel::read;
        else if (cells[1] == "other")
            r.pulse_label = PulseLabel::other;
        else
            fail(ErrorKind::io, where + ": unknown pulse label '" + cells[1] + "'");
        r.click_time = detail::number(cells[2], where) * 1e-9;
        if (f.has_origin && cells.size() >= 4) {
            if (cells[3] == "dark")
                r.origin = sim::Origin::dark;
            else if (cells[3] == "leakage")
                r.origin = sim::Origin::leakage;
        }
        max_seq = std::max(max_seq, r.sequence_index);
        f.records.records.push_back(r);
    }
    require(have_columns, ErrorKind::io, name + ": missing column header");
    f.records.n_sequences = f.header.n_sequences > 0 ? f.header.n_sequences : max_seq + 1;
    return f;
}

inline RecordFile read_records(const std::string& path)
{
    auto is = open_in(path);
    return read_records(is, path);
}

/// One row of a thermometry count table.
struct CountRow {
    Side side;
    double pulse_energy; // J at the device
    double clicks;
    double n_pulses;
};

/// Columns: side, pulse_energy_j, clicks, n_pulses. Lines starting with '#' are skipped.
inline std::vector<CountRow> read_counts(std::istream& is, const std::string& name = "counts")
{
    std::vector<CountRow> rows;
    std::string line;
    bool have_columns = false;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const auto cells = detail::split_csv(line);
        const std::string where = name + ":" + std::to_string(lineno);
        if (!have_columns) {
            require(cells.size() == 4 && cells[0] == "side" && cells[1] == "pulse_energy_j" && cells[2] == "clicks" &&
                        cells[3] == "n_pulses",
                    ErrorKind::io, where + ": expected columns side,pulse_energy_j,clicks,n_pulses");
            have_columns = true;
            continue;
        }
        require(cells.size() == 4, ErrorKind::io, where + ": expected 4 columns");
        CountRow r{};
        if (cells[0] == "red")
            r.side = Side::red;
        else if (cells[0] == "blue")
            r.side = Side::blue;
        else
            fail(ErrorKind::io, where + ": side must be red or blue");
        r.pulse_energy = detail::number(cells[1], where);
        r.clicks = detail::number(cells[2], where);
        r.n_pulses = detail::number(cells[3], where);
        rows.push_back(r);
    }
    require(have_columns, ErrorKind::io, name + ": missing column header");
    return rows;
}

inline std::vector<CountRow> read_counts(const std::string& path)
{
    auto is = open_in(path);
    return read_counts(is, path);
}

/// Two numeric columns; an optional non-numeric first row is taken as a header.
inline std::vector<fit::Point> read_xy(std::istream& is, const std::string& name = "data")
{
    std::vector<fit::Point> pts;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const auto cells = detail::split_csv(line);
        const std::string where = name + ":" + std::to_string(lineno);
        require(cells.size() >= 2, ErrorKind::io, where + ": expected at least 2 columns");
        if (first) {
            first = false;
            char* end = nullptr;
            std::strtod(cells[0].c_str(), &end);
            if (end == cells[0].c_str())
                continue;
        }
        pts.push_back({detail::number(cells[0], where), detail::number(cells[1], where)});
    }
    return pts;
}

inline std::vector<fit::Point> read_xy(const std::string& path)
{
    auto is = open_in(path);
    return read_xy(is, path);
}

inline void write_xy(std::ostream& os, const std::string& header, const std::vector<std::vector<double>>& rows)
{
    os << header << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i)
            os << (i ? "," : "") << format_double(r[i]);
        os << '\n';
    }
}

} // namespace omc::io
