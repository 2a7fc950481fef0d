#pragma once

// JSON descriptors and experiment runners behind the command-line tool.
// Every run is driven by one self-describing config; outputs are CSV/JSON
// with a comment line recording version, seed and unit, and are bit-stable
// under a fixed seed.

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "latrd/codec.hpp"
#include "latrd/distortion.hpp"
#include "latrd/fbl.hpp"
#include "latrd/lattice.hpp"
#include "latrd/rd_finite.hpp"
#include "latrd/sources.hpp"
#include "latrd/tilted.hpp"

namespace latrd {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes shared by the runners and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVacuous = 4;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

using json = nlohmann::json;

inline DistortionMeasure parse_distortion(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("distortion: object with \"kind\" required");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "mse") return DistortionMeasure::mse();
    if (kind == "hamming") return DistortionMeasure::hamming();
    if (kind == "symbol_error") {
        if (!j.contains("m")) throw ConfigError("distortion.m: required for symbol_error");
        return DistortionMeasure::symbol_error(j.at("m").get<int>());
    }
    if (kind == "lp_pow") {
        if (!j.contains("p") || !j.contains("s"))
            throw ConfigError("distortion.p/.s: required for lp_pow");
        double p = j.at("p").is_string() ? kInf : j.at("p").get<double>();
        return DistortionMeasure::scaled_lp_pow(p, j.at("s").get<double>());
    }
    if (kind == "matrix") {
        if (!j.contains("rows")) throw ConfigError("distortion.rows: required for matrix");
        return DistortionMeasure::finite_matrix(
            j.at("rows").get<std::vector<std::vector<double>>>());
    }
    throw ConfigError("distortion.kind: unknown kind \"" + kind + "\"");
}

inline ContinuousSource parse_continuous_source(const json& j) {
    if (!j.is_object() || !j.contains("family"))
        throw ConfigError("source: object with \"family\" required");
    std::string family = j.at("family").get<std::string>();
    if (family == "gaussian") {
        if (!j.contains("var")) throw ConfigError("source.var: required for gaussian");
        return ContinuousSource::gaussian(j.at("var").get<double>());
    }
    if (family == "uniform") {
        if (!j.contains("a") || !j.contains("b"))
            throw ConfigError("source.a/.b: required for uniform");
        return ContinuousSource::uniform(j.at("a").get<double>(), j.at("b").get<double>());
    }
    if (family == "laplace") {
        if (!j.contains("b")) throw ConfigError("source.b: required for laplace");
        return ContinuousSource::laplace(j.at("b").get<double>());
    }
    if (family == "product") {
        if (!j.contains("n") || !j.contains("letter"))
            throw ConfigError("source.n/.letter: required for product");
        return ContinuousSource::product(parse_continuous_source(j.at("letter")),
                                         j.at("n").get<int>());
    }
    throw ConfigError("source.family: unknown family \"" + family + "\"");
}

inline bool is_finite_source_descriptor(const json& j) {
    return j.is_object() && j.contains("pmf");
}

inline FiniteSource parse_finite_source(const json& j) {
    if (!j.contains("pmf") || !j.contains("distortion"))
        throw ConfigError("source.pmf/.distortion: required for finite sources");
    return FiniteSource(j.at("pmf").get<std::vector<double>>(),
                        parse_distortion(j.at("distortion")));
}

inline Lattice parse_lattice(const json& j) {
    if (!j.is_object() || !j.contains("family"))
        throw ConfigError("lattice: object with \"family\" required");
    std::string family = j.at("family").get<std::string>();
    if (family == "custom") {
        if (!j.contains("generator")) throw ConfigError("lattice.generator: required for custom");
        auto rows = j.at("generator").get<std::vector<std::vector<double>>>();
        int n = static_cast<int>(rows.size());
        Matrix g(n, n);
        for (int r = 0; r < n; ++r) {
            if (static_cast<int>(rows[r].size()) != n)
                throw ConfigError("lattice.generator: square matrix required");
            for (int c = 0; c < n; ++c) g.at(r, c) = rows[r][c];
        }
        std::optional<double> radius;
        if (j.contains("covering_radius")) radius = j.at("covering_radius").get<double>();
        return Lattice::custom(std::move(g), radius);
    }
    if (!j.contains("n")) throw ConfigError("lattice.n: required");
    int n = j.at("n").get<int>();
    if (family == "zn") return Lattice::zn(n);
    if (family == "dn") return Lattice::dn(n);
    if (family == "an_star") return Lattice::an_star(n);
    throw ConfigError("lattice.family: unknown family \"" + family + "\"");
}

inline LatticeFamily parse_lattice_family(const std::string& family) {
    if (family == "zn") return LatticeFamily::Zn;
    if (family == "dn") return LatticeFamily::Dn;
    if (family == "an_star") return LatticeFamily::AnStar;
    throw ConfigError("lattice.family: unknown family \"" + family + "\"");
}

struct ExperimentConfig {
    json raw;
    json source;
    json distortion;
    json lattice;
    std::vector<int> grid_n;
    std::vector<double> grid_d;
    std::vector<double> grid_eps;
    std::vector<std::string> bounds;
    std::uint64_t seed = 1;
    std::size_t samples = 1000000;
    std::string unit = "nats";
    std::string output;          // empty -> stdout
    std::string cell_csv;        // optional per-cell dump for simulate
    std::string solutions_json;  // optional full solver records for rd-curve
    std::string spectrum_csv;    // optional information spectrum for lattice-entropy
    std::string codec_mode = "variable";
    std::uint64_t M = 0;
    double rogers_c = 2.0;
    double kappa = -1.0;  // < 0: certificate-driven default
};

inline ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top-level object required");
    ExperimentConfig cfg;
    cfg.raw = j;
    if (j.contains("source")) cfg.source = j.at("source");
    if (j.contains("distortion")) cfg.distortion = j.at("distortion");
    if (j.contains("lattice")) cfg.lattice = j.at("lattice");
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        if (g.contains("n")) cfg.grid_n = g.at("n").get<std::vector<int>>();
        if (g.contains("d")) cfg.grid_d = g.at("d").get<std::vector<double>>();
        if (g.contains("eps")) cfg.grid_eps = g.at("eps").get<std::vector<double>>();
    }
    if (j.contains("bounds")) cfg.bounds = j.at("bounds").get<std::vector<std::string>>();
    if (!j.contains("seed")) throw ConfigError("seed: required (no implicit entropy)");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("samples")) cfg.samples = j.at("samples").get<std::size_t>();
    if (j.contains("unit")) {
        cfg.unit = j.at("unit").get<std::string>();
        if (cfg.unit != "nats" && cfg.unit != "bits")
            throw ConfigError("unit: must be \"nats\" or \"bits\"");
    }
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("cell_csv")) cfg.cell_csv = j.at("cell_csv").get<std::string>();
    if (j.contains("solutions_json"))
        cfg.solutions_json = j.at("solutions_json").get<std::string>();
    if (j.contains("spectrum_csv")) cfg.spectrum_csv = j.at("spectrum_csv").get<std::string>();
    if (j.contains("mode")) cfg.codec_mode = j.at("mode").get<std::string>();
    if (j.contains("M")) cfg.M = j.at("M").get<std::uint64_t>();
    if (j.contains("rogers_c")) cfg.rogers_c = j.at("rogers_c").get<double>();
    if (j.contains("kappa")) cfg.kappa = j.at("kappa").get<double>();
    return cfg;
}

namespace detail {

inline void write_preamble(std::ostream& os, const ExperimentConfig& cfg) {
    os << "# latrd " << kVersion << " seed=" << cfg.seed << " unit=" << cfg.unit << "\n";
    if (!cfg.raw.is_null()) os << "# config=" << cfg.raw.dump() << "\n";
}

inline double in_unit(double nats, const ExperimentConfig& cfg) {
    return cfg.unit == "bits" ? nats_to_bits(nats) : nats;
}

inline std::ostream& num(std::ostream& os) {
    os << std::setprecision(12);
    return os;
}

}  // namespace detail

// ---- rd-curve: d, R(d), SLB(d), equality flag -----------------------------

inline int run_rd_curve(const ExperimentConfig& cfg, std::ostream& os) {
    if (cfg.grid_d.empty()) throw ConfigError("grid.d: nonempty grid required");
    detail::write_preamble(os, cfg);
    os << "d,rate,slb,equality\n";
    detail::num(os);
    if (is_finite_source_descriptor(cfg.source)) {
        FiniteSource src = parse_finite_source(cfg.source);
        bool group = src.distortion.group_profile().has_value();
        json solutions = json::array();
        for (double d : cfg.grid_d) {
            FiniteRdSolution sol = blahut_arimoto(src, d, 1e-10);
            if (!sol.converged)
                throw std::runtime_error("rd solver failed to converge at d = " +
                                         std::to_string(d));
            TiltedDistribution z = solve_lambda(src.distortion, d);
            double slb = src.entropy() - phi_of_d(z, d);
            bool eq = group ? slb_equality_test(src, d).holds
                            : std::abs(sol.rate_nats - slb) <= 1e-6;
            os << d << ',' << detail::in_unit(sol.rate_nats, cfg) << ','
               << detail::in_unit(slb, cfg) << ',' << (eq ? 1 : 0) << '\n';
            if (!cfg.solutions_json.empty())
                solutions.push_back({{"d", d},
                                     {"rate_nats", sol.rate_nats},
                                     {"lambda_star", sol.lambda_star},
                                     {"distortion", sol.distortion},
                                     {"output_pmf", sol.output_pmf},
                                     {"dual_g", sol.dual_g},
                                     {"tilted_info", sol.tilted_info},
                                     {"iterations", sol.iterations},
                                     {"dual_gap", sol.dual_gap},
                                     {"zero_rate", sol.zero_rate},
                                     {"converged", sol.converged}});
        }
        if (!cfg.solutions_json.empty()) {
            std::ofstream sj(cfg.solutions_json);
            if (!sj) throw ConfigError("solutions_json: cannot open " + cfg.solutions_json);
            sj << solutions.dump(2) << "\n";
        }
        return kExitOk;
    }
    ContinuousSource src = parse_continuous_source(cfg.source).letter();
    DistortionMeasure dist =
        cfg.distortion.is_null() ? DistortionMeasure::mse() : parse_distortion(cfg.distortion);
    for (double d : cfg.grid_d) {
        SlbResult slb = classical_slb_from_stats(src.letter_entropy(), src.letter_varentropy(),
                                                 dist, d);
        double slb_clamped = std::max(0.0, slb.slb_rate);
        bool gaussian_mse =
            src.family() == SourceFamily::Gaussian && dist.kind() == DistortionKind::Mse;
        if (gaussian_mse) {
            // the lower bound is exact up to d = var, where the rate hits 0
            double rate = std::max(0.0, 0.5 * std::log(src.gaussian_variance() / d));
            os << d << ',' << detail::in_unit(rate, cfg) << ','
               << detail::in_unit(slb_clamped, cfg) << ',' << (d <= src.gaussian_variance() ? 1 : 0)
               << '\n';
        } else {
            os << d << ",nan," << detail::in_unit(slb_clamped, cfg) << ",0\n";
        }
    }
    return kExitOk;
}

// ---- slb: JSON records per d ----------------------------------------------

inline int run_slb(const ExperimentConfig& cfg, std::ostream& os) {
    if (cfg.grid_d.empty()) throw ConfigError("grid.d: nonempty grid required");
    double h, v;
    DistortionMeasure dist = DistortionMeasure::mse();
    if (is_finite_source_descriptor(cfg.source)) {
        FiniteSource src = parse_finite_source(cfg.source);
        h = src.entropy();
        v = src.varentropy();
        dist = src.distortion;
    } else {
        ContinuousSource src = parse_continuous_source(cfg.source).letter();
        h = src.letter_entropy();
        v = src.letter_varentropy();
        if (!cfg.distortion.is_null()) dist = parse_distortion(cfg.distortion);
    }
    json out = json::array();
    for (double d : cfg.grid_d) {
        SlbResult r = classical_slb_from_stats(h, v, dist, d);
        out.push_back({{"d", d},
                       {"lambda", r.lambda_star},
                       {"phi_nats", r.phi_d},
                       {"slb_nats", r.slb_rate},
                       {"varentropy_nats2", r.slb_varentropy},
                       {"vacuous", r.vacuous}});
    }
    detail::write_preamble(os, cfg);
    os << out.dump(2) << "\n";
    return kExitOk;
}

// ---- fbl: bound curves over the (n, d, eps) grid ---------------------------

inline int run_fbl(const ExperimentConfig& cfg, std::ostream& os) {
    if (cfg.grid_n.empty() || cfg.grid_d.empty() || cfg.grid_eps.empty())
        throw ConfigError("grid.n/.d/.eps: nonempty grids required");
    std::vector<std::string> bounds = cfg.bounds;
    if (bounds.empty())
        bounds = {"converse_ca", "converse_c", "achievability", "gaussian", "slb"};
    auto wants = [&bounds](const char* name) {
        return std::find(bounds.begin(), bounds.end(), name) != bounds.end();
    };

    detail::write_preamble(os, cfg);
    os << "n,d,eps,label,rate_nats,rate_bits,gamma,mc_se,flags\n";
    detail::num(os);
    bool any_nonvacuous = false;
    auto emit = [&](const BoundPoint& p) {
        os << p.n << ',' << p.d << ',' << p.eps << ',' << to_string(p.label) << ','
           << p.rate_nats_per_letter << ',' << nats_to_bits(p.rate_nats_per_letter) << ','
           << p.gamma << ',' << p.mc_se << ',' << p.flags << '\n';
        if (p.flags.find("vacuous") == std::string::npos) any_nonvacuous = true;
    };

    if (is_finite_source_descriptor(cfg.source)) {
        FiniteSource src = parse_finite_source(cfg.source);
        std::optional<double> d_c;
        if (is_balanced(src.distortion)) d_c = critical_distortion(src).d_c;
        for (int n : cfg.grid_n)
            for (double d : cfg.grid_d)
                for (double eps : cfg.grid_eps) {
                    if (wants("converse_ca")) emit(converse_ca(src, n, d, eps));
                    if (wants("gaussian") && d_c && d <= *d_c) {
                        GaussianApprox g = gaussian_approx(src, n, d, eps, *d_c);
                        emit(g.point);
                    }
                    if (wants("slb")) {
                        TiltedDistribution z = solve_lambda(src.distortion, d);
                        BoundPoint p{n, d, eps, src.entropy() - phi_of_d(z, d),
                                     BoundLabel::Slb};
                        emit(p);
                    }
                }
        return any_nonvacuous ? kExitOk : kExitVacuous;
    }

    ContinuousSource letter = parse_continuous_source(cfg.source).letter();
    DistortionMeasure dist =
        cfg.distortion.is_null() ? DistortionMeasure::mse() : parse_distortion(cfg.distortion);
    LatticeFamily family = LatticeFamily::AnStar;
    if (!cfg.lattice.is_null() && cfg.lattice.contains("family"))
        family = parse_lattice_family(cfg.lattice.at("family").get<std::string>());
    RegularityCertificate cert = letter.v_bound();

    for (int n : cfg.grid_n)
        for (double d : cfg.grid_d)
            for (double eps : cfg.grid_eps) {
                if (wants("converse_ca")) emit(converse_ca(letter, dist, n, d, eps));
                if (wants("converse_c")) emit(converse_c_beta(letter, dist, n, d, eps));
                if (wants("converse_c_expansion"))
                    emit(converse_c_beta_expansion(letter, dist, n, d, eps));
                if (wants("achievability")) {
                    AchievabilityResult a = achievability_lattice(
                        letter, cert, dist, family, n, d, eps, cfg.samples, cfg.seed);
                    emit(a.mc);
                    if (a.analytic) emit(*a.analytic);
                }
                if (wants("gaussian")) {
                    std::optional<double> kappa;
                    if (cfg.kappa >= 0.0) kappa = cfg.kappa;
                    emit(gaussian_approx(letter, dist, n, d, eps, kappa).point);
                }
                if (wants("memory")) {
                    ProcessDescriptor proc;
                    proc.entropy_rate_nats = letter.letter_entropy();
                    proc.log_concave = letter.log_concave();
                    proc.cert = letter.v_bound();
                    proc.alpha = letter.second_moment();
                    MemoryBounds mb = memory_bounds(proc, n, d, eps);
                    emit(mb.converse);
                    emit(mb.achievability);
                }
                if (wants("slb")) {
                    SlbResult s = classical_slb_from_stats(letter.letter_entropy(),
                                                           letter.letter_varentropy(), dist, d);
                    BoundPoint p{n, d, eps, std::max(0.0, s.slb_rate), BoundLabel::Slb};
                    if (s.vacuous) append_flag(p.flags, "vacuous");
                    emit(p);
                }
            }
    return any_nonvacuous ? kExitOk : kExitVacuous;
}

// ---- lattice-entropy: MC entropy vs the smoothness bound -------------------

inline int run_lattice_entropy(const ExperimentConfig& cfg, std::ostream& os) {
    if (cfg.grid_d.empty()) throw ConfigError("grid.d: nonempty grid required");
    if (cfg.lattice.is_null()) throw ConfigError("lattice: descriptor required");
    ContinuousSource src = parse_continuous_source(cfg.source);
    Lattice base = parse_lattice(cfg.lattice);
    if (base.dimension() != src.dimension())
        throw ConfigError("lattice.n: must match source dimension");
    RegularityCertificate cert = src.v_bound();
    if (!cfg.spectrum_csv.empty() && cfg.grid_d.size() != 1)
        throw ConfigError("spectrum_csv: requires a single-entry grid.d");

    detail::write_preamble(os, cfg);
    os << "# rogers_c=" << cfg.rogers_c << "\n";
    os << "d,entropy_mc_nats,mc_se,entropy_bound_nats,dentropy_lower_nats,dentropy_upper_nats,"
          "distinct_cells\n";
    detail::num(os);
    for (double d : cfg.grid_d) {
        Lattice lat = scale_to_distortion(base, DistortionMeasure::mse(src.dimension()), d);
        SpectrumEstimate est = output_info_spectrum(lat, src, cfg.samples, cfg.seed);
        if (!cfg.spectrum_csv.empty()) {
            std::ofstream sp(cfg.spectrum_csv);
            if (!sp) throw ConfigError("spectrum_csv: cannot open " + cfg.spectrum_csv);
            sp << "cell_info_nats,empirical_prob\n" << std::setprecision(12);
            for (size_t i = 0; i < est.info_ccdf.size(); ++i) {
                double next_tail =
                    i + 1 < est.info_ccdf.size() ? est.info_ccdf[i + 1].second : 0.0;
                sp << est.info_ccdf[i].first << ',' << est.info_ccdf[i].second - next_tail
                   << '\n';
            }
        }
        OutputEntropyBound bound = output_entropy_bound(lat, src, cert);
        DEntropyBounds de = d_entropy_bounds(src, src.dimension(), d, cfg.rogers_c);
        os << d << ',' << est.entropy_nats << ',' << est.standard_error << ','
           << bound.entropy_bound_nats << ',' << de.lower_nats << ',' << de.upper_nats << ','
           << est.distinct_cells << '\n';
    }
    return kExitOk;
}

// ---- simulate: codec statistics --------------------------------------------

inline int run_simulate(const ExperimentConfig& cfg, std::ostream& os,
                        std::ostream* cell_csv = nullptr) {
    if (cfg.grid_d.size() != 1) throw ConfigError("grid.d: exactly one d required for simulate");
    if (cfg.lattice.is_null()) throw ConfigError("lattice: descriptor required");
    ContinuousSource src = parse_continuous_source(cfg.source);
    Lattice base = parse_lattice(cfg.lattice);
    if (base.dimension() != src.dimension())
        throw ConfigError("lattice.n: must match source dimension");
    double d = cfg.grid_d[0];
    Lattice lat = scale_to_distortion(base, DistortionMeasure::mse(src.dimension()), d);

    CodecStats st;
    std::vector<CellRecord> cells;
    if (cfg.codec_mode == "variable") {
        st = simulate_variable_length(src, lat, d, cfg.samples, cfg.seed,
                                      cell_csv ? &cells : nullptr);
    } else if (cfg.codec_mode == "fixed") {
        if (cfg.M < 1) throw ConfigError("M: required (>= 1) for fixed-length mode");
        st = simulate_fixed_length(src, lat, d, cfg.M, cfg.samples, cfg.seed);
    } else {
        throw ConfigError("mode: must be \"variable\" or \"fixed\"");
    }

    json out{{"mode", cfg.codec_mode},
             {"d", d},
             {"avg_length_bits_per_letter", st.avg_length_bits_per_letter},
             {"entropy_estimate_bits_per_letter", st.entropy_estimate_bits_per_letter},
             {"entropy_se_bits_per_letter", st.entropy_se_bits_per_letter},
             {"eps_hat", st.eps_hat},
             {"wilson_lo", st.wilson_lo},
             {"wilson_hi", st.wilson_hi},
             {"spectrum_eps_bound", st.spectrum_eps_bound},
             {"M_used", st.M_used},
             {"samples", st.samples},
             {"seed", st.seed},
             {"distinct_cells", st.distinct_cells},
             {"escape_count", st.escape_count},
             {"distortion_violations", st.distortion_violations},
             {"flags", st.flags}};
    detail::write_preamble(os, cfg);
    os << out.dump(2) << "\n";
    if (cell_csv) {
        *cell_csv << "cell_index_hash,count,codeword_length\n";
        for (const CellRecord& c : cells)
            *cell_csv << c.index_hash << ',' << c.count << ',' << c.codeword_length << '\n';
    }
    return st.distortion_violations == 0 ? kExitOk : kExitNumeric;
}

// ---- dc: critical distortion ------------------------------------------------

inline int run_dc(const ExperimentConfig& cfg, std::ostream& os) {
    if (!is_finite_source_descriptor(cfg.source))
        throw ConfigError("source: finite source (pmf + distortion) required for dc");
    FiniteSource src = parse_finite_source(cfg.source);
    CriticalDistortion dc = critical_distortion(src);
    json out{{"d_c", dc.d_c}, {"verified", dc.verified}, {"ba_slb_gap", dc.ba_slb_gap}};
    detail::write_preamble(os, cfg);
    os << out.dump(2) << "\n";
    return kExitOk;
}

}  // namespace latrd
