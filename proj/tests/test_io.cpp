#include <gtest/gtest.h>

#include <sstream>

#include "omc/io.hpp"

using namespace omc;

namespace {

sim::RecordSet sample()
{
    sim::RecordSet rs;
    rs.n_sequences = 10;
    rs.records = {{0, PulseLabel::write, 1.0123456789e-6, sim::Origin::signal},
                  {3, PulseLabel::read, 1.2e-6, sim::Origin::dark},
                  {3, PulseLabel::read, 1.21e-6 + 1.0 / 3.0 * 1e-9, sim::Origin::leakage},
                  {7, PulseLabel::other, 5e-7, sim::Origin::signal}};
    return rs;
}

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected omc::Error";
    return ErrorKind::numerical;
}

} // namespace

TEST(Header, RoundTrip)
{
    io::ArtifactHeader h;
    h.config_hash = 0x0123456789abcdefULL;
    h.seed = 18446744073709551615ULL;
    h.n_sequences = 1000000;
    const std::string line = io::header_line(h);
    EXPECT_EQ(line, "# omctk 0.3.0 config_hash=0123456789abcdef seed=18446744073709551615 n_sequences=1000000");
    const auto back = io::parse_header(line);
    EXPECT_EQ(back.version, "0.3.0");
    EXPECT_EQ(back.config_hash, h.config_hash);
    EXPECT_EQ(back.seed, h.seed);
    EXPECT_EQ(back.n_sequences, h.n_sequences);
    EXPECT_EQ(kind_of([] { io::parse_header("# other 1"); }), ErrorKind::io);
    EXPECT_EQ(kind_of([] { io::parse_header("# omctk 0.3.0 seed=abc"); }), ErrorKind::io);
}

TEST(FormatDouble, ShortestRoundTrip)
{
    for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5e-9}) {
        const std::string s = io::format_double(v);
        EXPECT_EQ(std::stod(s), v) << s;
    }
    EXPECT_EQ(io::format_double(0.1), "0.1");
}

TEST(Records, RoundTripWithOrigin)
{
    const auto rs = sample();
    std::stringstream ss;
    io::write_records(ss, rs, {io::toolkit_version, 42, 7, rs.n_sequences}, false);
    const auto f = io::read_records(ss);
    EXPECT_TRUE(f.has_origin);
    EXPECT_EQ(f.header.seed, 7u);
    EXPECT_EQ(f.header.config_hash, 42u);
    EXPECT_EQ(f.records.n_sequences, 10);
    ASSERT_EQ(f.records.records.size(), rs.records.size());
    for (std::size_t i = 0; i < rs.records.size(); ++i) {
        const auto& a = rs.records[i];
        const auto& b = f.records.records[i];
        EXPECT_EQ(a.sequence_index, b.sequence_index);
        EXPECT_EQ(a.pulse_label, b.pulse_label);
        EXPECT_EQ(a.origin, b.origin);
        EXPECT_NEAR(a.click_time, b.click_time, 1e-15 * a.click_time);
    }
}

TEST(Records, BlindOmitsOrigin)
{
    const auto rs = sample();
    std::stringstream ss;
    io::write_records(ss, rs, {io::toolkit_version, 1, 2, rs.n_sequences}, true);
    EXPECT_EQ(ss.str().find("dark"), std::string::npos);
    EXPECT_EQ(ss.str().find("leakage"), std::string::npos);
    const auto f = io::read_records(ss);
    EXPECT_FALSE(f.has_origin);
    for (const auto& r : f.records.records)
        EXPECT_EQ(r.origin, sim::Origin::signal);
}

TEST(Records, SequenceCountWithoutHeader)
{
    std::istringstream in("sequence_index,pulse_label,click_time_ns\n4,write,1000\n9,read,1200\n");
    EXPECT_EQ(io::read_records(in).records.n_sequences, 10);
}

TEST(Records, MalformedInputIsIoError)
{
    EXPECT_EQ(kind_of([] {
                  std::istringstream in("a,b,c\n");
                  io::read_records(in);
              }),
              ErrorKind::io);
    EXPECT_EQ(kind_of([] {
                  std::istringstream in("sequence_index,pulse_label,click_time_ns\n1,sideways,3\n");
                  io::read_records(in);
              }),
              ErrorKind::io);
    EXPECT_EQ(kind_of([] {
                  std::istringstream in("sequence_index,pulse_label,click_time_ns\n1,read,x\n");
                  io::read_records(in);
              }),
              ErrorKind::io);
    EXPECT_EQ(kind_of([] { io::read_records(std::string("/nonexistent/records.csv")); }), ErrorKind::io);
    EXPECT_EQ(kind_of([] { io::open_out("/nonexistent/dir/out.csv"); }), ErrorKind::io);
}

TEST(Counts, Reader)
{
    std::istringstream in("# thermometry\nside,pulse_energy_j,clicks,n_pulses\nred,8.8e-16,190,1e7\nblue,8.8e-16,4800,1e7\n");
    const auto rows = io::read_counts(in);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].side, Side::red);
    EXPECT_DOUBLE_EQ(rows[1].clicks, 4800.0);
    EXPECT_DOUBLE_EQ(rows[1].n_pulses, 1e7);
    std::istringstream bad("side,pulse_energy_j,clicks,n_pulses\ngreen,1,1,1\n");
    EXPECT_EQ(kind_of([&] { io::read_counts(bad); }), ErrorKind::io);
}

TEST(Xy, ReaderSkipsOptionalHeader)
{
    std::istringstream a("x,y\n1,2\n3,4\n");
    std::istringstream b("1,2\n3,4\n");
    const auto pa = io::read_xy(a), pb = io::read_xy(b);
    ASSERT_EQ(pa.size(), 2u);
    ASSERT_EQ(pb.size(), 2u);
    EXPECT_EQ(pa[1].x, 3.0);
    EXPECT_EQ(pb[0].y, 2.0);
    std::stringstream out;
    io::write_xy(out, "x,y", {{0.1, 1.0 / 3.0}});
    const auto back = io::read_xy(out);
    EXPECT_EQ(back[0].y, 1.0 / 3.0);
}
