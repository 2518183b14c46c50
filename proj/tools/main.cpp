// Batch front door: generate Hadamard matrices, run synthesis and low-rank
// approximation, bound factorization norms, and certify s-goodness, with
// machine-readable JSON results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ulra/errors.hpp"
#include "ulra/gaussian.hpp"
#include "ulra/goodness.hpp"
#include "ulra/greedy.hpp"
#include "ulra/hadamard.hpp"
#include "ulra/matrix.hpp"
#include "ulra/norm_bounds.hpp"
#include "ulra/potential.hpp"
#include "ulra/random.hpp"
#include "ulra/sampler.hpp"
#include "ulra/version.hpp"

using ulra::Matrix;
using json = nlohmann::ordered_json;

namespace {

// JSON serialization with floats at 17 significant digits, so identical runs
// produce byte-identical output.
void dump_json(const json& j, std::string& out) {
    switch (j.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += '"';
                out += it.key();
                out += "\":";
                dump_json(it.value(), out);
            }
            out += '}';
            break;
        }
        case json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                dump_json(v, out);
            }
            out += ']';
            break;
        }
        case json::value_t::string: {
            out += '"';
            for (char c : j.get_ref<const std::string&>()) {
                switch (c) {
                    case '"': out += "\\\""; break;
                    case '\\': out += "\\\\"; break;
                    case '\n': out += "\\n"; break;
                    case '\t': out += "\\t"; break;
                    default: out += c;
                }
            }
            out += '"';
            break;
        }
        case json::value_t::number_float: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
            out += buf;
            break;
        }
        case json::value_t::number_integer:
            out += std::to_string(j.get<long long>());
            break;
        case json::value_t::number_unsigned:
            out += std::to_string(j.get<unsigned long long>());
            break;
        case json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        default:
            out += "null";
            break;
    }
}

void emit_result(const json& doc, const std::string& out_path) {
    std::string text;
    dump_json(doc, text);
    text += '\n';
    if (!out_path.empty()) {
        const std::string tmp = out_path + ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary);
            if (!f) throw ulra::Error("cannot open " + tmp + " for writing");
            f << text;
        }
        std::filesystem::rename(tmp, out_path);
    }
    std::cout << text;
}

json history_json(const std::vector<ulra::StepRecord>& hist) {
    json arr = json::array();
    for (const auto& h : hist) {
        json e;
        e["k"] = h.k;
        e["mu"] = h.mu;
        e["beta"] = h.beta;
        e["delta"] = h.delta;
        e["pick"] = h.pick;
        arr.push_back(std::move(e));
    }
    return arr;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

struct SynthFlags {
    std::optional<std::size_t> nu;
    std::string matrix_path, cert_path, out;
    std::size_t s = 1;
    std::string policy = "aprime";
    std::string schedule = "closed";
    std::size_t k_max = 0;  // 0: derived from the input
    std::uint64_t seed = 0;
    double tol = 1e-8;
    double cert_tol = 1e-6;
    long refine_every = -1;  // -1: default per input kind
    bool shortcut = false;
};

ulra::Policy parse_policy(const std::string& name) {
    if (name == "blind") return ulra::Policy::blind;
    if (name == "a") return ulra::Policy::a;
    if (name == "aprime") return ulra::Policy::aprime;
    if (name == "b") return ulra::Policy::b;
    if (name == "c") return ulra::Policy::c;
    if (name == "joint") return ulra::Policy::joint;
    throw ulra::ValidationError("unknown policy: " + name);
}

ulra::ScheduleKind parse_schedule(const std::string& name) {
    if (name == "fixed") return ulra::ScheduleKind::fixed;
    if (name == "recursive") return ulra::ScheduleKind::recursive;
    if (name == "closed") return ulra::ScheduleKind::closed;
    if (name == "joint") return ulra::ScheduleKind::joint;
    throw ulra::ValidationError("unknown schedule: " + name);
}

int cmd_synth(const SynthFlags& f) {
    Matrix A, Y;
    bool hadamard_input = false;
    if (f.nu) {
        const ulra::HadamardMatrix h = ulra::build_hadamard(*f.nu);
        Y = ulra::hadamard_certificate(h);
        A = std::move(h.matrix);
        hadamard_input = true;
    } else {
        if (f.matrix_path.empty()) {
            std::cerr << "synth needs --nu or --matrix\n";
            return 2;
        }
        A = ulra::read_matrix(f.matrix_path);
        if (f.cert_path.empty()) {
            std::cerr << "synth: a certificate matrix is required for general inputs "
                         "(--certificate FILE); selecting one by minimizing the weighted "
                         "row norms subject to the goodness constraint is not provided\n";
            return 2;
        }
        Y = ulra::read_matrix(f.cert_path);
    }

    ulra::RunOptions opts;
    opts.policy = parse_policy(f.policy);
    opts.schedule = parse_schedule(f.schedule);
    opts.k_max = f.k_max ? f.k_max : 4 * A.rows();
    opts.target_s = f.s;
    opts.tol = f.tol;
    opts.cert_tol = f.cert_tol;
    opts.hadamard_shortcut = hadamard_input || f.shortcut;
    opts.refine_every =
        (f.refine_every >= 0) ? static_cast<std::size_t>(f.refine_every)
                              : (opts.hadamard_shortcut ? 1 : 16);
    if (opts.policy == ulra::Policy::joint) opts.schedule = ulra::ScheduleKind::joint;

    ulra::RandomSource rng(f.seed);
    const ulra::SynthesisResult res =
        (opts.policy == ulra::Policy::blind)
            ? ulra::run_blind(Y, A, opts, rng)
            : ulra::run_derandomized(Y, A, opts, &rng);

    json cfg;
    cfg["command"] = "synth";
    if (f.nu) cfg["nu"] = *f.nu;
    if (!f.matrix_path.empty()) cfg["matrix"] = f.matrix_path;
    if (!f.cert_path.empty()) cfg["certificate"] = f.cert_path;
    cfg["s"] = f.s;
    cfg["policy"] = f.policy;
    cfg["schedule"] = f.schedule;
    cfg["k_max"] = opts.k_max;
    cfg["seed"] = f.seed;
    cfg["tol"] = f.tol;
    cfg["cert_tol"] = f.cert_tol;
    cfg["refine_every"] = opts.refine_every;
    cfg["hadamard_shortcut"] = opts.hadamard_shortcut;

    json result;
    result["rows"] = res.rows;
    result["m"] = res.rows.size();
    result["mu"] = res.mu;
    if (res.s.unbounded)
        result["s_max"] = nullptr;
    else
        result["s_max"] = res.s.s;
    result["s_unbounded"] = res.s.unbounded;
    result["certified"] = res.certified;
    result["history"] = history_json(res.history);

    json doc;
    doc["config"] = std::move(cfg);
    doc["result"] = std::move(result);
    doc["version"] = ulra::kVersion;
    emit_result(doc, f.out);
    return res.certified ? 0 : 3;
}

struct LowrankFlags {
    std::size_t k = 1;
    std::uint64_t seed = 0;
    std::string matrix_path, p_path, q_path, out;
    double tol = 1e-10;
};

int cmd_lowrank(const LowrankFlags& f) {
    ulra::FactorPair fp;
    Matrix A;
    if (!f.matrix_path.empty()) {
        A = ulra::read_matrix(f.matrix_path);
        fp = ulra::factor_via_svd(A, f.tol);
    } else if (!f.p_path.empty() && !f.q_path.empty()) {
        fp.P = ulra::read_matrix(f.p_path);
        fp.Q = ulra::read_matrix(f.q_path);
        if (fp.P.cols() != fp.Q.cols())
            throw ulra::DimensionError("P and Q must share their inner dimension");
        fp.D = ulra::norm_upper_from_factor(fp);
        A = ulra::scale(ulra::multiply(fp.P, ulra::transpose(fp.Q)), 1.0);
    } else {
        std::cerr << "lowrank needs --matrix or both --p and --q\n";
        return 2;
    }

    ulra::RandomSource rng(f.seed);
    const ulra::RankKFactor rk = ulra::gaussian_rank_k(fp, f.k, rng);
    const double err = ulra::approx_error(rk, A);
    const double mn = static_cast<double>(A.rows()) * static_cast<double>(A.cols());
    const double bound =
        std::sqrt(8.0 * std::log(4.0 * mn)) * fp.D / std::sqrt(static_cast<double>(f.k));

    json cfg;
    cfg["command"] = "lowrank";
    if (!f.matrix_path.empty()) cfg["matrix"] = f.matrix_path;
    if (!f.p_path.empty()) {
        cfg["p"] = f.p_path;
        cfg["q"] = f.q_path;
    }
    cfg["k"] = f.k;
    cfg["seed"] = f.seed;
    cfg["tol"] = f.tol;

    json result;
    result["m"] = A.rows();
    result["n"] = A.cols();
    result["d"] = fp.P.cols();
    result["D"] = fp.D;
    result["error"] = err;
    result["bound"] = bound;
    result["bound_met"] = err <= bound;
    result["left"] = matrix_json(rk.left);
    result["right"] = matrix_json(rk.right);
    result["scale"] = rk.scale;

    json doc;
    doc["config"] = std::move(cfg);
    doc["result"] = std::move(result);
    doc["version"] = ulra::kVersion;
    emit_result(doc, f.out);
    return 0;
}

int cmd_norm(const std::string& matrix_path, const std::string& out) {
    const Matrix A = ulra::read_matrix(matrix_path);
    const ulra::NormBounds nb = ulra::norm_bounds(A);
    const double corridor =
        std::sqrt(static_cast<double>(std::min(A.rows(), A.cols()))) * nb.lower + 1e-8;

    json cfg;
    cfg["command"] = "norm";
    cfg["matrix"] = matrix_path;
    json result;
    result["lower"] = nb.lower;
    result["upper"] = nb.upper;
    result["upper_source"] = ulra::to_string(nb.upper_source);
    result["corridor_ok"] = nb.lower <= nb.upper + 1e-10 && nb.upper <= corridor;

    json doc;
    doc["config"] = std::move(cfg);
    doc["result"] = std::move(result);
    doc["version"] = ulra::kVersion;
    emit_result(doc, out);
    return 0;
}

int cmd_goodness(const std::string& matrix_path, bool shortcut, double tol,
                 const std::string& out) {
    const Matrix Am = ulra::read_matrix(matrix_path);
    const ulra::GoodnessCertificate cert = ulra::opt_certificate(Am, tol, shortcut);

    json cfg;
    cfg["command"] = "goodness";
    cfg["matrix"] = matrix_path;
    cfg["hadamard_shortcut"] = shortcut;
    cfg["tol"] = tol;

    json result;
    result["mu"] = cert.mu;
    if (cert.s_unbounded)
        result["s_max"] = nullptr;
    else
        result["s_max"] = cert.s_max;
    result["s_unbounded"] = cert.s_unbounded;
    result["exact"] = cert.exact;
    if (!shortcut) {
        json per = json::array();
        const Matrix Bt = ulra::transpose(Am);
        for (std::size_t i = 0; i < Am.cols(); ++i) {
            // column i of the witness solves problem i; report its residual
            std::vector<double> y(Am.rows());
            for (std::size_t r = 0; r < Am.rows(); ++r) y[r] = cert.witness(r, i);
            double v = 0.0;
            for (std::size_t h = 0; h < Am.cols(); ++h) {
                double s = 0.0;
                for (std::size_t r = 0; r < Am.rows(); ++r) s += Bt(h, r) * y[r];
                v = std::max(v, std::fabs((i == h ? 1.0 : 0.0) - s));
            }
            per.push_back(v);
        }
        result["per_i"] = std::move(per);
    }

    json doc;
    doc["config"] = std::move(cfg);
    doc["result"] = std::move(result);
    doc["version"] = ulra::kVersion;
    emit_result(doc, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uniform-norm low-rank approximation and s-good submatrix synthesis"};
    app.require_subcommand(1);

    // hadamard
    auto* had = app.add_subcommand("hadamard", "construct a Sylvester Hadamard matrix");
    std::size_t had_nu = 0;
    std::string had_out;
    had->add_option("--nu", had_nu, "order exponent (size 2^nu)")->required();
    had->add_option("--out", had_out, "output matrix file")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "extract a certified s-good submatrix");
    SynthFlags sf;
    std::size_t synth_nu = 0;
    synth->add_option("--nu", synth_nu, "use the Hadamard matrix of order 2^nu");
    synth->add_option("--matrix", sf.matrix_path, "sensing matrix file");
    synth->add_option("--certificate", sf.cert_path, "certificate matrix file");
    synth->add_option("--s", sf.s, "target sparsity level")->required();
    synth->add_option("--policy", sf.policy,
                      "blind | a | aprime | b | c | joint (default aprime)");
    synth->add_option("--schedule", sf.schedule, "fixed | recursive | closed | joint");
    synth->add_option("--k-max", sf.k_max, "step budget (default 4x rows)");
    synth->add_option("--seed", sf.seed, "random seed");
    synth->add_option("--tol", sf.tol, "scalar solve tolerance");
    synth->add_option("--cert-tol", sf.cert_tol, "certification solve tolerance");
    synth->add_option("--refine-every", sf.refine_every,
                      "re-certification cadence (default 1 for Hadamard, 16 otherwise)");
    synth->add_flag("--hadamard-shortcut", sf.shortcut,
                    "certify via the single-problem Hadamard route");
    sf.out.clear();
    synth->add_option("--out", sf.out, "JSON output file");

    // lowrank
    auto* low = app.add_subcommand("lowrank", "randomized rank-k approximation");
    LowrankFlags lf;
    low->add_option("--k", lf.k, "number of Gaussian samples")->required();
    low->add_option("--seed", lf.seed, "random seed");
    low->add_option("--matrix", lf.matrix_path, "matrix to factor and approximate");
    low->add_option("--p", lf.p_path, "left factor file");
    low->add_option("--q", lf.q_path, "right factor file");
    low->add_option("--tol", lf.tol, "SVD tolerance");
    low->add_option("--out", lf.out, "JSON output file");

    // norm
    auto* nrm = app.add_subcommand("norm", "factorization-norm bounds");
    std::string norm_matrix, norm_out;
    nrm->add_option("--matrix", norm_matrix, "matrix file")->required();
    nrm->add_option("--out", norm_out, "JSON output file");

    // goodness
    auto* good = app.add_subcommand("goodness", "certify s-goodness of a matrix");
    std::string good_matrix, good_out;
    bool good_shortcut = false;
    double good_tol = 1e-6;
    good->add_option("--matrix", good_matrix, "matrix file")->required();
    good->add_flag("--hadamard-shortcut", good_shortcut,
                   "single-problem certification for Hadamard rows");
    good->add_option("--tol", good_tol, "solver tolerance");
    good->add_option("--out", good_out, "JSON output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    const auto start = std::chrono::steady_clock::now();
    int code = 0;
    try {
        if (had->parsed()) {
            const ulra::HadamardMatrix h = ulra::build_hadamard(had_nu);
            ulra::write_matrix(h.matrix, had_out);
        } else if (synth->parsed()) {
            if (synth->count("--nu")) sf.nu = synth_nu;
            code = cmd_synth(sf);
        } else if (low->parsed()) {
            code = cmd_lowrank(lf);
        } else if (nrm->parsed()) {
            code = cmd_norm(norm_matrix, norm_out);
        } else if (good->parsed()) {
            code = cmd_goodness(good_matrix, good_shortcut, good_tol, good_out);
        }
    } catch (const ulra::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    std::fprintf(stderr, "completed in %.2fs\n", elapsed.count());
    return code;
}
