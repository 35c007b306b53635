#include "ist/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ist/align.hpp"
#include "ist/decomp.hpp"
#include "ist/gmm.hpp"
#include "ist/io.hpp"
#include "ist/simulate.hpp"

namespace ist::cli {
namespace {

using nlohmann::json;

void emit(const json& doc, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << doc.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw InputError("cannot open '" + out_path + "' for writing");
    out << doc.dump(2) << "\n";
}

json complex_vector_json(const Eigen::VectorXcd& v) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index t = 0; t < v.size(); ++t) {
        re.push_back(v(t).real());
        im.push_back(v(t).imag());
    }
    return json{{"re", re}, {"im", im}};
}

struct DecomposeArgs {
    std::string in_path;
    std::string out_path;
    std::string recon_path;
    int r = 0;
    std::uint64_t seed = 0;
    bool no_refine = false;
};

int cmd_decompose(const DecomposeArgs& args) {
    const io::OmegaFile file = io::read_omega_file(args.in_path);
    if (file.missing_triples > 0)
        std::cerr << "warning: " << file.missing_triples
                  << " distinct-index entries missing, defaulted to 0\n";

    decomp::ProjectionConfig cfg;
    cfg.seed = args.seed;
    decomp::ApproxOptions opts;
    opts.refine = !args.no_refine;

    const decomp::Decomposition dec = std::visit(
        [&](const auto& tensor) { return decomp::approximate(tensor, args.r, cfg, opts); },
        file.tensor);

    json doc;
    doc["d"] = file.dim();
    doc["r"] = dec.r;
    doc["omega_residual"] = dec.omega_residual;
    doc["factors"] = json::array();
    for (const auto& p : dec.vectors) doc["factors"].push_back(complex_vector_json(p));
    doc["lambda"] = complex_vector_json(dec.lambda);
    doc["gamma"] = complex_vector_json(dec.gamma);
    json warnings = json::array();
    if (dec.degenerate) warnings.push_back("rank-deficient generating system");
    if (dec.refine_failed) warnings.push_back("refinement did not improve the residual");
    doc["warnings"] = warnings;
    emit(doc, args.out_path);

    if (!args.recon_path.empty()) {
        OmegaTensor<cdouble> recon(file.dim());
        for (const auto& p : dec.vectors) add_rank_one(recon, cdouble(1.0, 0.0), p);
        io::write_omega_file(args.recon_path, recon);
    }
    return warnings.empty() ? 0 : 2;
}

struct LearnArgs {
    std::string in_path;
    std::string out_path;
    std::optional<int> r;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    bool no_refine = false;
};

int cmd_learn(const LearnArgs& args) {
    const io::CsvSamples csv = io::read_csv_file(args.in_path);
    const int d = static_cast<int>(csv.samples.cols());

    const gmm::MomentPair moments = gmm::sample_moments(csv.samples);

    std::optional<int> estimated;
    int r;
    if (args.r) {
        r = *args.r;
        decomp::check_rank_bound(d, r);
    } else {
        const auto f_omega = omega_extract(moments.m3);
        estimated = decomp::estimate_rank(f_omega, args.tol);
        r = std::max(1, std::min(*estimated, d / 2 - 1));
        if (r != *estimated)
            std::cerr << "warning: estimated rank " << *estimated << " clamped to " << r
                      << " to satisfy r <= d/2-1\n";
    }

    gmm::FitOptions opts;
    opts.seed = args.seed;
    opts.refine = !args.no_refine;
    const gmm::FitResult fit = gmm::fit_moments(moments, r, opts);

    json doc;
    doc["d"] = d;
    doc["r"] = r;
    if (estimated) doc["estimated_rank"] = *estimated;
    doc["weights"] = std::vector<double>(fit.params.weights.data(),
                                         fit.params.weights.data() + fit.params.weights.size());
    doc["means"] = json::array();
    for (const auto& m : fit.params.means)
        doc["means"].push_back(std::vector<double>(m.data(), m.data() + m.size()));
    doc["diag_covs"] = json::array();
    for (const auto& c : fit.params.diag_covs)
        doc["diag_covs"].push_back(std::vector<double>(c.data(), c.data() + c.size()));
    doc["diagnostics"] = {{"omega_residual", fit.diagnostics.omega_residual},
                          {"objective", fit.diagnostics.objective}};
    emit(doc, args.out_path);
    return fit.diagnostics.degenerate ? 2 : 0;
}

struct RankArgs {
    std::string in_path;
    double tol = 1e-6;
};

int cmd_rank(const RankArgs& args) {
    const io::OmegaFile file = io::read_omega_file(args.in_path);
    if (file.missing_triples > 0)
        std::cerr << "warning: " << file.missing_triples
                  << " distinct-index entries missing, defaulted to 0\n";
    const int rank = std::visit(
        [&](const auto& tensor) { return decomp::estimate_rank(tensor, args.tol); }, file.tensor);
    std::cout << rank << "\n";
    return 0;
}

struct BenchArgs {
    int table = 1;
    int d = 20;
    int r = 3;
    double eps = 0.1;
    std::size_t samples = 10000;
    int trials = 10;
    std::uint64_t seed = 0;
    double mean_scale = 1.0;
    std::string score = "likelihood";
    int threads = 1;
    bool no_refine = false;
    std::string out_prefix;
};

void write_report_csv(const std::string& path, const std::vector<simulate::TrialReport>& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << "trial,rel_error,abs_error,accuracy,seconds\n";
    char buf[160];
    for (std::size_t t = 0; t < rows.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", t, rows[t].rel_error,
                      rows[t].abs_error, rows[t].accuracy, rows[t].seconds);
        out << buf;
    }
}

int cmd_bench(const BenchArgs& args) {
    const std::string prefix =
        args.out_prefix.empty() ? ("table" + std::to_string(args.table)) : args.out_prefix;
    json doc;
    if (args.table == 1) {
        const auto sum = simulate::run_table1(args.d, args.r, args.eps, args.trials, args.seed,
                                              args.threads, !args.no_refine);
        write_report_csv(prefix + ".csv", sum.rows);
        doc = {{"table", 1},
               {"d", sum.d},
               {"r", sum.r},
               {"eps", sum.eps},
               {"trials", sum.trials},
               {"rel_error", {{"min", sum.rel_min}, {"mean", sum.rel_mean}, {"max", sum.rel_max}}},
               {"abs_error", {{"min", sum.abs_min}, {"mean", sum.abs_mean}, {"max", sum.abs_max}}},
               {"mean_seconds", sum.mean_seconds}};
        std::cout << "table 1 d=" << sum.d << " r=" << sum.r << " eps=" << sum.eps
                  << ": abs mean=" << sum.abs_mean << " max=" << sum.abs_max
                  << " rel mean=" << sum.rel_mean << "\n";
    } else {
        const auto mode = args.score == "posterior" ? gmm::ScoreMode::posterior
                                                    : gmm::ScoreMode::likelihood;
        const auto sum = simulate::run_table2(args.d, args.r, args.samples, args.trials, args.seed,
                                              args.mean_scale, mode, args.threads);
        write_report_csv(prefix + ".csv", sum.rows);
        doc = {{"table", 2},
               {"d", sum.d},
               {"r", sum.r},
               {"samples", sum.samples},
               {"trials", sum.trials},
               {"failures", sum.failures},
               {"mean_accuracy", sum.mean_accuracy},
               {"mean_seconds", sum.mean_seconds}};
        std::cout << "table 2 d=" << sum.d << " r=" << sum.r << " N=" << sum.samples
                  << ": accuracy mean=" << sum.mean_accuracy << " time=" << sum.mean_seconds
                  << "s\n";
    }
    std::ofstream out(prefix + ".json");
    if (!out) throw InputError("cannot open '" + prefix + ".json' for writing");
    out << doc.dump(2) << "\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"incomplete symmetric tensor decomposition and diagonal Gaussian mixtures"};
    app.require_subcommand(1);

    DecomposeArgs dargs;
    auto* dec = app.add_subcommand("decompose", "rank-r decomposition of a distinct-index tensor");
    dec->add_option("--in", dargs.in_path, "tensor file")->required();
    dec->add_option("--r", dargs.r, "decomposition rank")->required();
    dec->add_option("--seed", dargs.seed, "randomness seed");
    dec->add_option("--out", dargs.out_path, "output JSON path (default stdout)");
    dec->add_option("--write-recon", dargs.recon_path, "write the reconstructed tensor here");
    dec->add_flag("--no-refine", dargs.no_refine, "skip the nonlinear refinement");

    LearnArgs largs;
    auto* learn = app.add_subcommand("learn", "fit a diagonal Gaussian mixture from samples");
    learn->add_option("--in", largs.in_path, "CSV sample file")->required();
    int learn_r = 0;
    auto* ropt = learn->add_option("--r", learn_r, "component count (default: estimated)");
    learn->add_option("--seed", largs.seed, "randomness seed");
    learn->add_option("--tol", largs.tol, "rank estimation tolerance");
    learn->add_option("--out", largs.out_path, "output JSON path (default stdout)");
    learn->add_flag("--no-refine", largs.no_refine, "skip both refinement stages");

    RankArgs rargs;
    auto* rank = app.add_subcommand("rank", "estimate the symmetric rank from flattenings");
    rank->add_option("--in", rargs.in_path, "tensor file")->required();
    rank->add_option("--tol", rargs.tol, "singular value threshold");

    BenchArgs bargs;
    auto* bench = app.add_subcommand("bench", "reproduce the simulation tables at desk scale");
    bench->add_option("--table", bargs.table, "1 = tensor approximation, 2 = mixture learning")
        ->required()
        ->check(CLI::Range(1, 2));
    bench->add_option("--d", bargs.d, "dimension");
    bench->add_option("--r", bargs.r, "rank / component count");
    bench->add_option("--eps", bargs.eps, "perturbation norm (table 1)");
    bench->add_option("--samples", bargs.samples, "sample count per trial (table 2)");
    bench->add_option("--trials", bargs.trials, "trial count");
    bench->add_option("--seed", bargs.seed, "base seed; trial t uses seed+t");
    bench->add_option("--mean-scale", bargs.mean_scale, "scale of the generated means (table 2)");
    bench->add_option("--score", bargs.score, "classification rule")
        ->check(CLI::IsMember({"likelihood", "posterior"}));
    bench->add_option("--threads", bargs.threads, "trial-level parallelism");
    bench->add_flag("--no-refine", bargs.no_refine, "skip the nonlinear refinement (table 1)");
    bench->add_option("--out", bargs.out_prefix, "report path prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (dec->parsed()) return cmd_decompose(dargs);
        if (learn->parsed()) {
            if (ropt->count() > 0) largs.r = learn_r;
            return cmd_learn(largs);
        }
        if (rank->parsed()) return cmd_rank(rargs);
        if (bench->parsed()) return cmd_bench(bargs);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace ist::cli
