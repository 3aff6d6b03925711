#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "omc/omc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace omc;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool blind = false;
};

void add_common(CLI::App* app, Common& c, bool with_seed = true, bool with_threads = false, bool with_blind = false)
{
    app->add_option("--config", c.config, "experiment configuration file")->envname("OMCTK_CONFIG");
    app->add_option("--out", c.out, "output path")->envname("OMCTK_OUT");
    if (with_seed)
        app->add_option("--seed", c.seed, "random seed")->envname("OMCTK_SEED");
    if (with_threads)
        app->add_option("--threads", c.threads, "worker threads")->envname("OMCTK_THREADS")->check(CLI::PositiveNumber);
    if (with_blind)
        app->add_flag("--blind", c.blind, "omit ground-truth origin tags")->envname("OMCTK_BLIND");
}

ExperimentConfig load(const Common& c) { return c.config.empty() ? ExperimentConfig{} : load_config(c.config); }

io::ArtifactHeader header_for(const ExperimentConfig& cfg, std::uint64_t seed, long long n_seq)
{
    return {io::toolkit_version, config_hash(cfg), seed, n_seq};
}

void log_run(const std::string& cmd, const io::ArtifactHeader& h, const ExperimentConfig& cfg)
{
    std::cerr << io::header_line(h) << " command=" << cmd << '\n';
    std::istringstream in(serialize_config(cfg));
    for (std::string line; std::getline(in, line);)
        std::cerr << "#   " << line << '\n';
}

// "<out>" with a .csv/.json extension stripped; `fallback` when empty
std::string stem_of(const std::string& out, const std::string& fallback)
{
    if (out.empty())
        return fallback;
    fs::path p(out);
    if (p.extension() == ".csv" || p.extension() == ".json")
        p.replace_extension();
    return p.string();
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    if (!dir.empty())
        fs::create_directories(dir, ec);
    if (ec)
        fail(ErrorKind::io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_csv(const std::string& path, const io::ArtifactHeader& h, const std::string& columns,
               const std::vector<std::vector<double>>& rows)
{
    ensure_dir(fs::path(path).parent_path());
    auto os = io::open_out(path);
    os << io::header_line(h) << '\n';
    io::write_xy(os, columns, rows);
    if (!os)
        fail(ErrorKind::io, "write failed for '" + path + "'");
}

json provenance(const io::ArtifactHeader& h, const ExperimentConfig& cfg)
{
    json j;
    j["header"] = io::header_line(h);
    j["toolkit_version"] = h.version;
    j["config_hash"] = io::hex(h.config_hash);
    j["seed"] = h.seed;
    j["config"] = serialize_config(cfg);
    return j;
}

void write_json(const std::string& path, const json& j, bool echo = true)
{
    ensure_dir(fs::path(path).parent_path());
    auto os = io::open_out(path);
    os << j.dump(2) << '\n';
    if (!os)
        fail(ErrorKind::io, "write failed for '" + path + "'");
    if (echo)
        std::cout << j.dump(2) << '\n';
}

std::vector<double> log_grid(double lo, double hi, int n)
{
    std::vector<double> v;
    for (int i = 0; i < n; ++i)
        v.push_back(lo * std::pow(hi / lo, n > 1 ? double(i) / (n - 1) : 0.0));
    return v;
}

json fit_json(const fit::FitResult& f)
{
    json j;
    j["converged"] = f.converged;
    j["message"] = f.message;
    j["iterations"] = f.iterations;
    j["residual_norm"] = f.residual_norm;
    json p = json::object();
    for (std::size_t i = 0; i < f.names.size(); ++i)
        p[f.names[i]] = {{"value", f.values[i]}, {"std_error", f.std_errors[i]}};
    j["parameters"] = p;
    return j;
}

// ---- cavity probe -------------------------------------------------------

json cavity_probe(const ExperimentConfig& cfg, const io::ArtifactHeader& h, const std::string& stem, double span,
                  int points)
{
    const auto spec = cavity::reflection_spectrum(cfg.cavity, span, static_cast<std::size_t>(points));
    std::vector<std::vector<double>> rows;
    std::vector<fit::Point> pts;
    for (const auto& p : spec) {
        rows.push_back({p.detuning.hz, std::norm(p.amplitude), std::arg(p.amplitude)});
        pts.push_back({p.detuning.hz, std::norm(p.amplitude)});
    }
    write_csv(stem + ".csv", h, "detuning_hz,power_reflectance,phase_rad", rows);

    const auto ce = cavity::coupling_efficiency(cfg.cavity);
    const auto sm = cavity::sideband_metrics(cfg.cavity, cfg.mode);
    json j = provenance(h, cfg);
    j["kind"] = "cavity-probe";
    j["csv"] = std::filesystem::path(stem + ".csv").filename().string();
    j["coupling"] = {{"eta_dev", ce.eta_dev}, {"over_coupled", ce.over_coupled},
                     {"over_coupled_by_phase", ce.over_coupled_by_phase}};
    j["sideband"] = {{"resolution", sm.resolution}, {"suppression_db", sm.suppression_db}};
    j["lorentzian_fit"] = fit_json(fit::fit_lorentzian_with_offset(pts));
    j["kappa_hz"] = cfg.cavity.kappa().hz;
    return j;
}

// ---- thermometry ----------------------------------------------------------

json thermometry(const ExperimentConfig& cfg, const io::ArtifactHeader& h, const std::vector<io::CountRow>& rows,
                 double duration, const std::string& stem)
{
    const double eta = cfg.detection.eta_det();
    std::vector<const io::CountRow*> red, blue;
    for (const auto& r : rows)
        (r.side == Side::red ? red : blue).push_back(&r);

    json table = json::array();
    std::vector<std::vector<double>> out;
    std::vector<fit::Point> c_vs_p;
    for (const auto* r : red) {
        const auto b = std::find_if(blue.begin(), blue.end(), [&](const io::CountRow* x) {
            return std::abs(x->pulse_energy - r->pulse_energy) <= 1e-9 * r->pulse_energy;
        });
        json row;
        row["pulse_energy_j"] = r->pulse_energy;
        const double pr = optomech::scattering_probability(Side::red, r->pulse_energy, cfg.g0, cfg.cavity, cfg.mode);
        const auto gr = optomech::normalized_rate(r->clicks, r->n_pulses, pr, eta);
        const double nc = optomech::pulse_intracavity_photons(Side::red, r->pulse_energy, duration, cfg.cavity, cfg.mode);
        const double coop = optomech::cooperativity(cfg.g0, nc, cfg.cavity, cfg.mode);
        row["p_s_red"] = pr;
        row["cooperativity"] = coop;
        c_vs_p.push_back({pr, coop});
        if (b == blue.end()) {
            row["error"] = "no blue-side row at this pulse energy";
            table.push_back(row);
            continue;
        }
        const double pb = optomech::scattering_probability(Side::blue, (*b)->pulse_energy, cfg.g0, cfg.cavity, cfg.mode);
        const auto gb = optomech::normalized_rate((*b)->clicks, (*b)->n_pulses, pb, eta);
        row["p_s_blue"] = pb;
        row["gamma_r"] = {{"value", gr.value}, {"std_error", gr.std_error}};
        row["gamma_b"] = {{"value", gb.value}, {"std_error", gb.std_error}};
        try {
            const auto n = optomech::occupation_from_asymmetry(gr, gb);
            row["n_th"] = {{"value", n.value}, {"std_error", n.std_error}};
            out.push_back({r->pulse_energy, pr, pb, gr.value, gr.std_error, gb.value, gb.std_error, n.value,
                           n.std_error, coop});
        } catch (const Error& e) {
            row["error"] = e.what();
        }
        table.push_back(row);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a[1] < b[1]; });
    write_csv(stem + ".csv", h,
              "pulse_energy_j,p_s_red,p_s_blue,gamma_r,gamma_r_err,gamma_b,gamma_b_err,n_th,n_th_err,cooperativity",
              out);
    json j = provenance(h, cfg);
    j["kind"] = "thermometry";
    j["csv"] = std::filesystem::path(stem + ".csv").filename().string();
    j["eta_det"] = eta;
    j["rows"] = table;
    if (c_vs_p.size() >= 2)
        j["cooperativity_vs_p_s"] = fit_json(fit::fit_linear(c_vs_p));
    return j;
}

ExperimentConfig single_pulse_config(const ExperimentConfig& base, Side side, double p_s, long long n)
{
    ExperimentConfig c = base;
    const double P = optomech::peak_power_for_probability(side, p_s, 40e-9, c.detection.eta_fc, c.g0, c.cavity, c.mode);
    c.sequence.pulses = {Pulse{side == Side::red ? PulseLabel::read : PulseLabel::write, side, 1e-6, 40e-9, P}};
    c.sequence.n_sequences = n;
    return c;
}

// ---- heating ------------------------------------------------------------

json heating(const ExperimentConfig& cfg, const io::ArtifactHeader& h, const std::vector<double>& ps, int points,
             const std::string& stem, bool fit_curves)
{
    const auto taus = log_grid(10e-9, 100e-6, points);
    std::string cols = "tau_s";
    std::vector<std::vector<double>> rows(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i)
        rows[i].push_back(taus[i]);
    json curves = json::array();
    for (double p : ps) {
        const auto r = dynamics::heating_response(cfg.mode.heating, p);
        const auto tr = dynamics::heating_trajectory(cfg.mode.heating, r.amplitude, r.n_instant, taus);
        cols += ",n_th_ps" + io::format_double(p);
        std::vector<fit::Point> pts;
        for (std::size_t i = 0; i < taus.size(); ++i) {
            rows[i].push_back(cfg.mode.n_baseline + tr.n_th[i]);
            pts.push_back({taus[i], cfg.mode.n_baseline + tr.n_th[i]});
        }
        json c{{"p_s", p}, {"amplitude", r.amplitude}, {"n_instant", r.n_instant}};
        if (fit_curves)
            c["biexponential_fit"] = fit_json(fit::fit_biexponential(pts));
        curves.push_back(c);
    }
    write_csv(stem + ".csv", h, cols, rows);
    json j = provenance(h, cfg);
    j["kind"] = "heating";
    j["csv"] = std::filesystem::path(stem + ".csv").filename().string();
    j["tau_rise"] = cfg.mode.heating.tau_rise;
    j["tau_decay"] = cfg.mode.heating.tau_decay;
    j["peak_delay"] = dynamics::heating_peak_delay(cfg.mode.heating);
    j["curves"] = curves;
    return j;
}

// ---- simulate -------------------------------------------------------------

json simulate(const ExperimentConfig& cfg, const Common& c, const std::string& stem, sim::RecordSet* keep = nullptr)
{
    auto res = sim::simulate(cfg, c.seed, c.threads);
    const auto h = header_for(cfg, c.seed, cfg.sequence.n_sequences);
    {
        ensure_dir(fs::path(stem).parent_path());
        auto os = io::open_out(stem + ".csv");
        io::write_records(os, res.records, h, c.blind);
        if (!os)
            fail(ErrorKind::io, "write failed for '" + stem + ".csv'");
    }
    json j = provenance(h, cfg);
    j["kind"] = "simulate";
    j["csv"] = std::filesystem::path(stem + ".csv").filename().string();
    j["n_sequences"] = res.report.n_sequences;
    json pulses = json::array();
    for (std::size_t k = 0; k < res.report.pulses.size(); ++k) {
        const auto& p = res.report.pulses[k];
        json q{{"label", to_string(p.label)}, {"side", to_string(p.side)}, {"p_s", p.p_s},
               {"clicks", res.report.clicks_per_pulse[k]}, {"dark_mean", p.dark_mean},
               {"leakage_mean", p.leakage_mean}};
        if (!c.blind) {
            q["occupation"] = p.occupation;
            q["click_probability"] = p.paired_with >= 0 ? p.joint.p_read : p.click_prob;
        }
        pulses.push_back(q);
    }
    j["pulses"] = pulses;
    json per_label = json::object();
    for (const auto& [l, n] : res.report.clicks_per_label)
        per_label[to_string(l)] = n;
    j["clicks_per_label"] = per_label;
    if (!c.blind) {
        json per_origin = json::object();
        for (const auto& [o, n] : res.report.clicks_per_origin)
            per_origin[sim::to_string(o)] = n;
        j["clicks_per_origin"] = per_origin;
    }
    if (keep)
        *keep = std::move(res.records);
    return j;
}

// ---- g2 -------------------------------------------------------------------

std::pair<int, int> parse_range(const std::string& s)
{
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const int v = std::stoi(s);
            return {v, v};
        }
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (const std::exception&) {
        fail(ErrorKind::config, "--dn-range: expected 'a..b', got '" + s + "'");
    }
}

sim::WindowSpec parse_window(PulseLabel l, const std::string& s)
{
    const auto comma = s.find(',');
    require(comma != std::string::npos, ErrorKind::config, "window: expected 'begin,end' fractions, got '" + s + "'");
    try {
        return {l, std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    } catch (const std::exception&) {
        fail(ErrorKind::config, "window: expected 'begin,end' fractions, got '" + s + "'");
    }
}

json oracle_json(const ExperimentConfig& cfg)
{
    const auto plan = sim::plan_pulses(cfg);
    for (std::size_t k = 0; k < plan.size(); ++k) {
        if (plan[k].paired_with < 0)
            continue;
        const auto& w = plan[static_cast<std::size_t>(plan[k].paired_with)];
        const auto& r = plan[k];
        // darks and leakage act as independent false clicks per window
        const double dw = -std::expm1(-(w.dark_mean + w.leakage_mean));
        const double dr = -std::expm1(-(r.dark_mean + r.leakage_mean));
        const auto g = fock::oracle_g2(w.occupation, w.p_s, r.p_s, cfg.detection.eta_det(), dw, dr);
        return {{"g2", g.g2}, {"p_w", g.p_w}, {"p_r", g.p_r}, {"p_wr", g.p_wr}, {"p_r_given_w", g.p_r_given_w},
                {"n_th", w.occupation}, {"p_s_write", w.p_s}, {"p_s_read", r.p_s}, {"dark_write", dw},
                {"dark_read", dr}, {"truncation", g.optical.d}};
    }
    fail(ErrorKind::config, "oracle: configuration has no blue pulse followed by a red pulse");
}

json g2(const ExperimentConfig* cfg, const sim::RecordSet& rs, const io::ArtifactHeader& h, int lo, int hi,
        double level, const std::vector<sim::WindowSpec>& windows, const std::string& stem)
{
    sim::RecordSet use = rs;
    if (!windows.empty()) {
        require(cfg != nullptr, ErrorKind::config, "window trimming needs --config to locate the pulses");
        use = sim::filter_windows(rs, cfg->sequence, windows);
    }
    const auto est = stats::g2_range(use, lo, hi, level);
    std::vector<std::vector<double>> rows;
    json arr = json::array();
    for (const auto& e : est) {
        rows.push_back({double(e.delta_n), e.value, e.ci_low, e.ci_high, double(e.counts.n_coinc),
                        double(e.counts.n_w), double(e.counts.n_r), double(e.counts.n_sequences)});
        arr.push_back({{"delta_n", e.delta_n}, {"value", e.value}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high},
                       {"n_coinc", e.counts.n_coinc}, {"n_w", e.counts.n_w}, {"n_r", e.counts.n_r},
                       {"n_sequences", e.counts.n_sequences}});
    }
    write_csv(stem + ".csv", h, "delta_n,g2,ci_low,ci_high,n_coinc,n_w,n_r,n_sequences", rows);
    json j;
    j["header"] = io::header_line(h);
    j["toolkit_version"] = h.version;
    j["config_hash"] = io::hex(h.config_hash);
    j["seed"] = h.seed;
    j["kind"] = "g2";
    j["csv"] = std::filesystem::path(stem + ".csv").filename().string();
    j["level"] = level;
    json w = json::array();
    for (const auto& s : windows)
        w.push_back({{"label", to_string(s.label)}, {"begin", s.begin_fraction}, {"end", s.end_fraction}});
    j["windows"] = w;
    j["estimates"] = arr;
    return j;
}

// ---- budget ---------------------------------------------------------------

json budget(const ExperimentConfig& cfg, const io::ArtifactHeader& h, const std::string& stem, double qmin,
            double qmax, int points)
{
    const auto b = transducer::compute_budget(cfg.piezo);
    const auto sweep = transducer::noise_vs_q(cfg.piezo, qmin, qmax, points);
    std::vector<std::vector<double>> rows;
    for (const auto& p : sweep)
        rows.push_back({p.q_uw, p.c_em, p.added_noise});
    write_csv(stem + ".csv", h, "q_uw,c_em,added_noise", rows);
    json j = provenance(h, cfg);
    j["kind"] = "budget";
    j["csv"] = std::filesystem::path(stem + ".csv").filename().string();
    j["inputs"] = {{"f_s_hz", cfg.piezo.f_s.hz}, {"f_p_hz", cfg.piezo.f_p.hz}, {"c_piezo_f", cfg.piezo.c_piezo},
                   {"c_parasitic_f", cfg.piezo.c_parasitic}, {"gamma_m_hz", cfg.piezo.gamma_m.hz},
                   {"f_m_hz", cfg.piezo.f_m.hz}, {"n_m", cfg.piezo.n_m}, {"eta_e", cfg.piezo.eta_e}};
    j["k_eff2"] = b.k_eff2;
    j["k_eff2_reduced"] = b.k_eff2_reduced;
    j["kappa_e_uw_hz"] = b.kappa_e_uw.hz;
    j["q_uw"] = b.q_uw;
    j["c_em"] = b.c_em;
    j["added_noise"] = b.added_noise;
    j["impedance_ohm"] = b.impedance;
    j["q_for_c20"] = b.q_for_c20;
    return j;
}

// ---- reproduce ------------------------------------------------------------

json reproduce(const std::string& target, const ExperimentConfig& cfg, const Common& c, long long sequences)
{
    const fs::path dir = c.out.empty() ? fs::path("reproduce_" + target) : fs::path(c.out);
    ensure_dir(dir);
    const auto h = header_for(cfg, c.seed, cfg.sequence.n_sequences);
    auto path = [&](const std::string& name) { return (dir / name).string(); };
    json j;

    if (target == "fig1b") {
        j = cavity_probe(cfg, h, path("reflection"), 40e9, 801);
    } else if (target == "fig1c") {
        const double f0 = cfg.mode.f_m.hz, g = cfg.mode.gamma_m.hz;
        std::vector<std::vector<double>> rows;
        std::vector<fit::Point> pts;
        for (int i = 0; i <= 800; ++i) {
            const double f = f0 - 10 * g + 20 * g * i / 800;
            const double s = dynamics::mechanical_psd(Frequency(f), cfg.mode, cfg.mode.n_baseline);
            rows.push_back({f, s});
            pts.push_back({f - f0, s});
        }
        write_csv(path("psd.csv"), h, "frequency_hz,psd_per_hz", rows);
        const auto fr = fit::fit_lorentzian_with_offset(pts);
        j = provenance(h, cfg);
        j["kind"] = "fig1c";
        j["csv"] = "psd.csv";
        j["lorentzian_fit"] = fit_json(fr);
        j["linewidth_hz"] = fr.value("fwhm");
        j["quality_factor"] = f0 / fr.value("fwhm");
    } else if (target == "fig2") {
        std::vector<io::CountRow> rows;
        std::vector<std::vector<double>> csv;
        std::uint64_t s = c.seed;
        for (double p : {0.002, 0.005, 0.01, 0.02})
            for (Side side : {Side::red, Side::blue}) {
                const auto sc = single_pulse_config(cfg, side, p, sequences);
                const auto r = sim::simulate(sc, s++, c.threads);
                const double E = optomech::pulse_energy_at_device(sc.sequence.pulses[0].peak_power, 40e-9,
                                                                  sc.detection.eta_fc);
                const auto clicks = static_cast<double>(r.records.records.size());
                rows.push_back({side, E, clicks, double(sequences)});
                csv.push_back({side == Side::red ? 0.0 : 1.0, E, clicks, double(sequences)});
            }
        {
            auto os = io::open_out(path("counts.csv"));
            os << io::header_line(h) << '\n' << "side,pulse_energy_j,clicks,n_pulses\n";
            for (const auto& r : rows)
                os << to_string(r.side) << ',' << io::format_double(r.pulse_energy) << ','
                   << io::format_double(r.clicks) << ',' << io::format_double(r.n_pulses) << '\n';
        }
        j = thermometry(cfg, h, rows, 40e-9, path("thermometry"));
        j["counts_csv"] = path("counts.csv");
    } else if (target == "fig3a") {
        j = heating(cfg, h, {0.013, 0.025, 0.05}, 200, path("heating"), true);
    } else if (target == "fig3b") {
        sim::RecordSet rs;
        Common sc = c;
        json sj = simulate(cfg, sc, path("records"), &rs);
        j = g2(&cfg, rs, h, -4, 4, 0.68, {}, path("g2"));
        j["simulation"] = sj;
        j["oracle"] = oracle_json(cfg);
        j["config"] = serialize_config(cfg);
    } else if (target == "figS1") {
        std::vector<std::vector<double>> rows;
        std::vector<fit::Point> pts;
        std::vector<optomech::CalibrationPoint> cal;
        for (int i = 1; i <= 15; ++i) {
            const double P = 0.05e-6 * i;
            const double E = optomech::pulse_energy_at_device(P, 40e-9, cfg.detection.eta_fc);
            const double pr = optomech::scattering_probability(Side::red, E, cfg.g0, cfg.cavity, cfg.mode);
            const double pb = optomech::scattering_probability(Side::blue, E, cfg.g0, cfg.cavity, cfg.mode);
            rows.push_back({P * 1e6, pr, pb});
            pts.push_back({P * 1e6, pr});
            cal.push_back({E, pr, Side::red});
        }
        write_csv(path("calibration.csv"), h, "peak_power_uw,p_s_red,p_s_blue", rows);
        j = provenance(h, cfg);
        j["kind"] = "figS1";
        j["csv"] = "calibration.csv";
        j["linear_fit_per_uw"] = fit_json(fit::fit_linear(pts));
        const auto g = optomech::g0_from_calibration(cal, cfg.cavity, cfg.mode);
        j["g0_hz"] = g.g0.hz;
    } else if (target == "budget" || target == "figS2") {
        j = budget(cfg, h, path("budget"), 10, 1e4, 61);
    } else {
        fail(ErrorKind::config,
             "reproduce: unknown target '" + target + "' (fig1b, fig1c, fig2, fig3a, fig3b, figS1, budget)");
    }
    write_json(path("report.json"), j);
    return j;
}

int exit_code(ErrorKind k)
{
    switch (k) {
    case ErrorKind::config:
    case ErrorKind::validation:
    case ErrorKind::domain:
        return 2;
    case ErrorKind::numerical:
    case ErrorKind::model:
        return 3;
    case ErrorKind::io:
        return 4;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"omctk: pulsed optomechanics toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", io::toolkit_version);

    Common c;
    std::function<void()> action;

    auto* probe = app.add_subcommand("cavity-probe", "reflection spectrum and coupling classification");
    double span = 40e9;
    int points = 801;
    add_common(probe, c, false);
    probe->add_option("--span", span, "detuning span in Hz")->check(CLI::PositiveNumber);
    probe->add_option("--points", points, "number of detunings")->check(CLI::Range(2, 10000000));
    probe->callback([&] {
        action = [&] {
            const auto cfg = load(c);
            const auto h = header_for(cfg, 0, 0);
            log_run("cavity-probe", h, cfg);
            const auto stem = stem_of(c.out, "cavity_probe");
            write_json(stem + ".json", cavity_probe(cfg, h, stem, span, points));
        };
    });

    auto* therm = app.add_subcommand("thermometry", "occupation and cooperativity from sideband counts");
    std::string counts;
    double duration = 40e-9;
    add_common(therm, c, false);
    therm->add_option("--counts", counts, "counts CSV: side,pulse_energy_j,clicks,n_pulses")->required();
    therm->add_option("--duration", duration, "pulse duration in s")->check(CLI::PositiveNumber);
    therm->callback([&] {
        action = [&] {
            const auto cfg = load(c);
            const auto h = header_for(cfg, 0, 0);
            log_run("thermometry", h, cfg);
            const auto stem = stem_of(c.out, "thermometry");
            write_json(stem + ".json", thermometry(cfg, h, io::read_counts(counts), duration, stem));
        };
    });

    auto* heat = app.add_subcommand("heating", "occupation after a pulse versus delay");
    std::vector<double> ps{0.013, 0.025, 0.05};
    int heat_points = 200;
    bool heat_fit = false;
    add_common(heat, c, false);
    heat->add_option("--p-s", ps, "scattering probabilities of the heating pulse")->delimiter(',');
    heat->add_option("--points", heat_points, "delays on a log grid from 10 ns to 100 us")->check(CLI::Range(2, 1000000));
    heat->add_flag("--fit", heat_fit, "fit each curve with the biexponential model");
    heat->callback([&] {
        action = [&] {
            const auto cfg = load(c);
            const auto h = header_for(cfg, 0, 0);
            log_run("heating", h, cfg);
            const auto stem = stem_of(c.out, "heating");
            write_json(stem + ".json", heating(cfg, h, ps, heat_points, stem, heat_fit));
        };
    });

    auto* simc = app.add_subcommand("simulate", "Monte Carlo time-tagged clicks");
    long long sim_sequences = 0;
    add_common(simc, c, true, true, true);
    simc->add_option("--sequences", sim_sequences, "override the number of sequences")->check(CLI::PositiveNumber);
    simc->callback([&] {
        action = [&] {
            auto cfg = load(c);
            if (sim_sequences > 0)
                cfg.sequence.n_sequences = sim_sequences;
            log_run("simulate", header_for(cfg, c.seed, cfg.sequence.n_sequences), cfg);
            const auto stem = stem_of(c.out, "records");
            write_json(stem + ".json", simulate(cfg, c, stem));
        };
    });

    auto* g2c = app.add_subcommand("g2", "write-read cross-correlation with likelihood intervals");
    std::string records, dn_range = "0..0", write_window, read_window;
    double level = 0.68;
    bool oracle = false;
    add_common(g2c, c, false);
    g2c->add_option("--records", records, "records CSV from simulate or an experiment");
    g2c->add_option("--dn-range", dn_range, "sequence offsets, e.g. -4..4");
    g2c->add_option("--level", level, "confidence level")->check(CLI::Range(0.0, 1.0));
    g2c->add_option("--write-window", write_window, "kept fraction of the write pulse, 'begin,end'");
    g2c->add_option("--read-window", read_window, "kept fraction of the read pulse, 'begin,end'");
    g2c->add_flag("--oracle", oracle, "add the exact prediction for the configuration");
    g2c->callback([&] {
        action = [&] {
            require(!records.empty() || oracle, ErrorKind::config, "g2: give --records, --oracle, or both");
            std::optional<ExperimentConfig> cfg;
            if (!c.config.empty() || oracle)
                cfg = load(c);
            const auto stem = stem_of(c.out, "g2");
            json j;
            if (!records.empty()) {
                const auto rf = io::read_records(records);
                if (cfg)
                    log_run("g2", rf.header, *cfg);
                else
                    std::cerr << io::header_line(rf.header) << " command=g2\n";
                std::vector<sim::WindowSpec> w;
                if (!write_window.empty())
                    w.push_back(parse_window(PulseLabel::write, write_window));
                if (!read_window.empty())
                    w.push_back(parse_window(PulseLabel::read, read_window));
                const auto [lo, hi] = parse_range(dn_range);
                j = g2(cfg ? &*cfg : nullptr, rf.records, rf.header, lo, hi, level, w, stem);
                j["records"] = records;
            } else {
                const auto h = header_for(*cfg, 0, cfg->sequence.n_sequences);
                log_run("g2", h, *cfg);
                j = provenance(h, *cfg);
                j["kind"] = "g2";
            }
            if (oracle)
                j["oracle"] = oracle_json(*cfg);
            write_json(stem + ".json", j);
        };
    });

    auto* fitc = app.add_subcommand("fit", "least-squares fits of tabulated data");
    std::string model, data;
    add_common(fitc, c, false);
    fitc->add_option("--model", model, "lorentzian, biexp or linear")
        ->required()
        ->check(CLI::IsMember({"lorentzian", "biexp", "linear"}));
    fitc->add_option("--data", data, "two-column CSV")->required();
    fitc->callback([&] {
        action = [&] {
            const ExperimentConfig cfg = load(c);
            const auto h = header_for(cfg, 0, 0);
            std::cerr << io::header_line(h) << " command=fit model=" << model << '\n';
            const auto pts = io::read_xy(data);
            fit::FitResult f;
            if (model == "lorentzian")
                f = fit::fit_lorentzian_with_offset(pts);
            else if (model == "biexp")
                f = fit::fit_biexponential(pts);
            else
                f = fit::fit_linear(pts);
            std::vector<std::vector<double>> rows;
            for (const auto& p : pts) {
                double m = 0;
                if (model == "lorentzian")
                    m = fit::lorentzian_with_offset(p.x, f.values[0], f.values[1], f.values[2], f.values[3], f.values[4]);
                else if (model == "biexp")
                    m = fit::biexponential(p.x, f.values[0], f.values[1], f.values[2], f.values[3]);
                else
                    m = f.values[0] * p.x + f.values[1];
                rows.push_back({p.x, p.y, m});
            }
            const auto stem = stem_of(c.out, "fit");
            write_csv(stem + ".csv", h, "x,y,model", rows);
            json j;
            j["header"] = io::header_line(h);
            j["toolkit_version"] = h.version;
            j["kind"] = "fit";
            j["model"] = model;
            j["data"] = data;
            j["csv"] = std::filesystem::path(stem + ".csv").filename().string();
            j["fit"] = fit_json(f);
            write_json(stem + ".json", j);
            if (!f.converged)
                fail(ErrorKind::numerical, "fit: " + f.message);
        };
    });

    auto* bud = app.add_subcommand("budget", "transducer conversion budget and noise-versus-Q sweep");
    double qmin = 10, qmax = 1e4;
    int qpoints = 61;
    add_common(bud, c, false);
    bud->add_option("--q-min", qmin, "lowest microwave Q in the sweep")->check(CLI::PositiveNumber);
    bud->add_option("--q-max", qmax, "highest microwave Q in the sweep")->check(CLI::PositiveNumber);
    bud->add_option("--points", qpoints, "sweep points")->check(CLI::Range(2, 1000000));
    bud->callback([&] {
        action = [&] {
            const auto cfg = load(c);
            const auto h = header_for(cfg, 0, 0);
            log_run("budget", h, cfg);
            const auto stem = stem_of(c.out, "budget");
            write_json(stem + ".json", budget(cfg, h, stem, qmin, qmax, qpoints));
        };
    });

    auto* rep = app.add_subcommand("reproduce", "scripted pipeline for one figure or table");
    std::string target;
    long long rep_sequences = 10000000;
    add_common(rep, c, true, true, true);
    rep->add_option("target", target, "fig1b, fig1c, fig2, fig3a, fig3b, figS1 or budget")->required();
    rep->add_option("--sequences", rep_sequences, "sequences per simulated point (fig2)")->check(CLI::PositiveNumber);
    rep->callback([&] {
        action = [&] {
            const auto cfg = load(c);
            log_run("reproduce " + target, header_for(cfg, c.seed, cfg.sequence.n_sequences), cfg);
            reproduce(target, cfg, c, rep_sequences);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        action();
    } catch (const Error& e) {
        std::cerr << "omctk: error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "omctk: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
