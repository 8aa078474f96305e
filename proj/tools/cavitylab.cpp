// cavitylab — belief propagation, Bethe free energy, exact oracles, and
// d-regular phase diagrams for pairwise factor models on finite graphs.
//
// Subcommands:
//   exact   exact log partition function and marginals (enumeration / tree DP)
//   bp      loopy belief propagation on a graph
//   bethe   Bethe free energy (regular form, polytope optimum, popdyn)
//   phase   threshold tables and bound curves (potts / ising / hardcore)
//   verify  run the full oracle-equivalence and invariant suite

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cavitylab/bethe_functional.hpp"
#include "cavitylab/bp_engine.hpp"
#include "cavitylab/exact_oracle.hpp"
#include "cavitylab/factor_spec.hpp"
#include "cavitylab/graph_store.hpp"
#include "cavitylab/phase_regular.hpp"
#include "cavitylab/verify.hpp"

using json = nlohmann::json;
using namespace cavitylab;

namespace {

std::string fmt17(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

struct SpecFlags {
    std::string model = "potts";
    std::string spec_file;
    int q = 3;
    double beta = 0.0, B = 0.0, lambda = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--model", model, "potts|ising|hardcore");
        cmd->add_option("--spec-file", spec_file, "JSON spec config file");
        cmd->add_option("--q", q, "alphabet size (potts)");
        cmd->add_option("--beta", beta, "interaction parameter");
        cmd->add_option("--B", B, "magnetic field");
        cmd->add_option("--lambda", lambda, "hard-core fugacity");
    }
    FactorSpec build() const {
        if (!spec_file.empty()) {
            std::ifstream in(spec_file);
            if (!in)
                throw CavityError(ErrCode::ParseError, "cannot open spec file " + spec_file);
            std::stringstream ss;
            ss << in.rdbuf();
            return spec_from_json(ss.str());
        }
        if (model == "potts") return FactorSpec::make_potts(q, beta, B);
        if (model == "ising") return FactorSpec::make_ising(beta, B);
        if (model == "hardcore") return FactorSpec::make_hardcore(lambda);
        throw CavityError(ErrCode::InvalidParameter, "unknown model " + model);
    }
};

struct GraphFlags {
    std::string edge_list;
    std::vector<int> random_regular;  // n d
    std::uint64_t seed = 1;
    std::string tree_kind;  // "regular" | "gw-poisson" | "gw-det"
    int tree_d = 3;
    double gw_mean = 1.0;
    int depth = 2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--edge-list", edge_list, "edge list file (\"u v\" per line)");
        cmd->add_option("--random-regular", random_regular, "n d (uses --seed)")
            ->expected(2);
        cmd->add_option("--tree", tree_kind, "regular|gw-poisson|gw-det (uses --depth)");
        cmd->add_option("--d", tree_d, "tree degree / offspring count");
        cmd->add_option("--gw-mean", gw_mean, "Poisson offspring mean");
        cmd->add_option("--depth", depth, "tree depth");
        cmd->add_option("--seed", seed, "RNG seed");
    }
    int sources() const {
        return (!edge_list.empty()) + (!random_regular.empty()) + (!tree_kind.empty());
    }
    FiniteGraph build() const {
        if (sources() != 1)
            throw CavityError(ErrCode::InvalidParameter,
                              "exactly one graph source required "
                              "(--edge-list | --random-regular | --tree)");
        if (!edge_list.empty()) {
            std::ifstream in(edge_list);
            if (!in)
                throw CavityError(ErrCode::ParseError, "cannot open edge list " + edge_list);
            std::stringstream ss;
            ss << in.rdbuf();
            return graph_from_edge_list(ss.str());
        }
        if (!random_regular.empty())
            return gen_random_regular(random_regular[0], random_regular[1], seed);
        return build_tree().graph;
    }
    RootedTree build_tree() const {
        if (tree_kind == "regular") return gen_tree(TreeKind::regular(tree_d), depth, seed);
        if (tree_kind == "gw-poisson")
            return gen_tree(TreeKind::galton_watson(OffspringLaw::poisson(gw_mean)), depth, seed);
        if (tree_kind == "gw-det")
            return gen_tree(TreeKind::galton_watson(OffspringLaw::deterministic(tree_d)), depth,
                            seed);
        throw CavityError(ErrCode::InvalidParameter, "unknown tree kind " + tree_kind);
    }
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
    } else {
        std::ofstream out(out_path);
        out << text;
        if (!text.empty() && text.back() != '\n') out << '\n';
    }
}

json exact_to_json(const ExactResult& r, bool marginals) {
    json j;
    j["log_z"] = r.log_z;
    j["fed"] = r.free_energy_density;
    if (marginals) {
        j["vertex_marginals"] = r.vertex_marginals;
        j["edge_marginals"] = r.edge_marginals;
    }
    return j;
}

OffspringLaw parse_law(const std::string& s) {
    auto colon = s.find(':');
    std::string kind = s.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    if (kind == "deterministic") return OffspringLaw::deterministic(std::stoi(arg));
    if (kind == "poisson") return OffspringLaw::poisson(std::stod(arg));
    throw CavityError(ErrCode::InvalidParameter,
                      "law must be deterministic:<k> or poisson:<mean>");
}

std::vector<double> parse_grid(const std::string& s) {
    // "lo:hi:step"
    double lo, hi, step;
    char c1, c2;
    std::istringstream in(s);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
        throw CavityError(ErrCode::InvalidParameter, "grid must be lo:hi:step");
    std::vector<double> g;
    for (double x = lo; x <= hi + 1e-12; x += step) g.push_back(x);
    return g;
}

int thread_count(int flag_value) {
    if (const char* env = std::getenv("CAVITYLAB_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return flag_value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavitylab: BP fixed points, Bethe free energy, exact oracles, "
                 "and d-regular phase diagrams for factor models"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (env CAVITYLAB_THREADS overrides)");

    // ---- exact ----
    auto* cmd_exact = app.add_subcommand("exact", "exact log Z via enumeration or tree DP");
    SpecFlags espec;
    GraphFlags egraph;
    espec.attach(cmd_exact);
    egraph.attach(cmd_exact);
    bool e_marginals = false;
    std::string e_out, e_boundary = "free";
    int e_sigma0 = 0, e_full_degree = -1;
    cmd_exact->add_flag("--marginals", e_marginals, "include marginals in the output");
    cmd_exact->add_option("--out", e_out, "output path (default stdout)");
    cmd_exact->add_option("--boundary", e_boundary, "free|fixed (tree DP only)");
    cmd_exact->add_option("--sigma0", e_sigma0, "boundary spin for --boundary fixed");
    cmd_exact->add_option("--full-degree", e_full_degree,
                          "ambient regular degree for boundary phantom counts");

    // ---- bp ----
    auto* cmd_bp = app.add_subcommand("bp", "loopy BP on a finite graph");
    SpecFlags bspec;
    GraphFlags bgraph;
    bspec.attach(cmd_bp);
    bgraph.attach(cmd_bp);
    double b_tol = 1e-10, b_damping = 0.0;
    int b_max_iter = 10000;
    std::string b_init = "uniform", b_schedule = "synchronous", b_out;
    bool b_no_messages = false;
    std::uint64_t b_init_seed = 1;
    cmd_bp->add_option("--tol", b_tol, "convergence tolerance");
    cmd_bp->add_option("--damping", b_damping, "damping in [0,1)");
    cmd_bp->add_option("--max-iter", b_max_iter, "iteration cap");
    cmd_bp->add_option("--init", b_init, "uniform|ordered|random");
    cmd_bp->add_option("--init-seed", b_init_seed, "seed for --init random");
    cmd_bp->add_option("--schedule", b_schedule, "synchronous|sequential");
    cmd_bp->add_flag("--no-messages", b_no_messages, "suppress messages in the output");
    cmd_bp->add_option("--out", b_out, "output path");

    // ---- bethe ----
    auto* cmd_bethe = app.add_subcommand("bethe", "Bethe free energy evaluations");
    SpecFlags hspec;
    hspec.attach(cmd_bethe);
    std::string h_form = "regular", h_out;
    int h_d = 3, h_pool = 100000, h_sweeps = 200, h_starts = 8;
    std::string h_branch = "free", h_root_law = "deterministic:3", h_off_law = "deterministic:2";
    std::uint64_t h_seed = 1;
    cmd_bethe->add_option("--form", h_form, "regular|polytope|popdyn");
    cmd_bethe->add_option("--d", h_d, "tree degree");
    cmd_bethe->add_option("--branch", h_branch, "free|ordered (regular form)");
    cmd_bethe->add_option("--n-starts", h_starts, "random starts (polytope form)");
    cmd_bethe->add_option("--pool", h_pool, "population size (popdyn)");
    cmd_bethe->add_option("--sweeps", h_sweeps, "population sweeps (popdyn)");
    cmd_bethe->add_option("--root-law", h_root_law, "deterministic:<k>|poisson:<m>");
    cmd_bethe->add_option("--offspring-law", h_off_law, "deterministic:<k>|poisson:<m>");
    cmd_bethe->add_option("--seed", h_seed, "seed (popdyn / polytope starts)");
    cmd_bethe->add_option("--out", h_out, "output path");

    // ---- phase ----
    auto* cmd_phase = app.add_subcommand("phase", "phase thresholds, curves and bounds");
    std::string p_family, p_out, p_beta_grid, p_lambda_grid = "0.1:3.9:0.2";
    int p_q = 3, p_d = 3;
    double p_B = 0.0, p_beta = 0.0;
    std::string p_format = "csv";
    cmd_phase->add_option("family", p_family, "potts|ising|hardcore")->required();
    cmd_phase->add_option("--q", p_q, "number of spins");
    cmd_phase->add_option("--d", p_d, "tree degree");
    cmd_phase->add_option("--B", p_B, "magnetic field");
    cmd_phase->add_option("--beta", p_beta, "single query beta (emits one PhaseReport)");
    cmd_phase->add_option("--beta-grid", p_beta_grid, "lo:hi:step (emits CSV table)");
    cmd_phase->add_option("--lambda-grid", p_lambda_grid, "lo:hi:step (hardcore table)");
    cmd_phase->add_option("--format", p_format, "csv|json");
    cmd_phase->add_option("--out", p_out, "output path");

    // ---- verify ----
    auto* cmd_verify = app.add_subcommand("verify", "run the acceptance suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "ERR_PARAM " << e.what() << "\n";
        return 2;
    }

    try {
        if (*cmd_exact) {
            auto spec = espec.build();
            ExactResult res;
            if (!egraph.tree_kind.empty() && e_boundary != "free") {
                auto tree = egraph.build_tree();
                auto bc = BoundaryCondition::fixed(
                    e_sigma0, e_full_degree > 0 ? e_full_degree : egraph.tree_d);
                res = tree_log_z(tree, spec, bc);
            } else if (!egraph.tree_kind.empty()) {
                res = tree_log_z(egraph.build_tree(), spec, BoundaryCondition::free());
            } else {
                res = exact_log_z(egraph.build(), spec, e_marginals);
            }
            emit(exact_to_json(res, e_marginals).dump(2), e_out);
        } else if (*cmd_bp) {
            auto spec = bspec.build();
            auto g = bgraph.build();
            BPOptions opts;
            opts.tol = b_tol;
            opts.damping = b_damping;
            opts.max_iter = b_max_iter;
            opts.schedule =
                b_schedule == "sequential" ? Schedule::Sequential : Schedule::Synchronous;
            if (b_init == "ordered")
                opts.init = BPInit::fixed(0);
            else if (b_init == "random")
                opts.init = BPInit::random(b_init_seed);
            auto res = bp_run_graph(g, spec, opts);
            json j;
            j["converged"] = res.converged;
            j["iterations"] = res.iterations;
            j["residual"] = res.residual;
            j["bethe_value"] = res.bethe_value;
            j["vertex_beliefs"] = res.vertex_beliefs;
            j["pair_beliefs"] = res.pair_beliefs;
            if (!b_no_messages) j["messages"] = res.messages.h;
            emit(j.dump(2), b_out);
        } else if (*cmd_bethe) {
            auto spec = hspec.build();
            json j;
            if (h_form == "regular") {
                auto fp = bp_fixed_point_regular(
                    h_d, spec, h_branch == "ordered" ? Branch::Ordered : Branch::Free);
                auto br = phi_regular(h_d, spec, fp.h);
                j["form"] = "regular";
                j["phi_vx"] = br.phi_vx;
                j["phi_edge"] = br.phi_edge;
                j["phi_total"] = br.phi_total;
                j["fixed_point"] = fp.h;
                j["converged"] = fp.converged;
                j["residual"] = fp.residual;
            } else if (h_form == "polytope") {
                auto opt = optimize_local_polytope(h_d, spec, h_starts, h_seed);
                j["form"] = "polytope";
                j["value"] = opt.value;
                j["pair_belief"] = opt.best.joint;
                j["marginal"] = opt.best.marginal();
            } else if (h_form == "popdyn") {
                auto est = phi_popdyn(parse_law(h_root_law), parse_law(h_off_law), spec, h_pool,
                                      h_sweeps, h_seed, thread_count(threads));
                j["form"] = "popdyn";
                j["mean"] = est.mean;
                j["stderr"] = est.stderr_;
                j["pool"] = est.pool;
                j["sweeps"] = est.sweeps;
                j["seed"] = est.seed;
                j["rejected"] = est.rejected;
                j["unreliable"] = est.unreliable;
            } else {
                throw CavityError(ErrCode::InvalidParameter, "unknown --form " + h_form);
            }
            emit(j.dump(2), h_out);
        } else if (*cmd_phase) {
            if (p_family == "potts") {
                if (!p_beta_grid.empty()) {
                    std::ostringstream csv;
                    json rows = json::array();
                    csv << "beta,r_free,r_ordered,phi_f,phi_1,lower,upper,region\n";
                    for (double beta : parse_grid(p_beta_grid)) {
                        auto rep = potts_free_energy_bounds(p_q, p_d, beta, p_B);
                        const char* region =
                            rep.region == PhaseRegion::Unique         ? "UNIQUE"
                            : rep.region == PhaseRegion::BoundaryF    ? "BOUNDARY_F"
                            : rep.region == PhaseRegion::BoundaryPlus ? "BOUNDARY_PLUS"
                                                                      : "NONUNIQUE";
                        if (p_format == "json") {
                            rows.push_back({{"beta", beta},
                                            {"r_free", rep.r_free},
                                            {"r_ordered", rep.r_ordered},
                                            {"phi_f", rep.phi_free},
                                            {"phi_1", rep.phi_ordered},
                                            {"lower", rep.lower},
                                            {"upper", rep.upper},
                                            {"region", region}});
                            continue;
                        }
                        csv << fmt17(beta) << ',' << fmt17(rep.r_free) << ','
                            << fmt17(rep.r_ordered) << ',' << fmt17(rep.phi_free) << ','
                            << fmt17(rep.phi_ordered) << ',' << fmt17(rep.lower) << ','
                            << fmt17(rep.upper) << ',' << region << '\n';
                    }
                    emit(p_format == "json" ? rows.dump(2) : csv.str(), p_out);
                } else {
                    auto rep = potts_free_energy_bounds(p_q, p_d, p_beta, p_B);
                    json j;
                    j["q"] = rep.q;
                    j["d"] = rep.d;
                    j["beta"] = rep.beta;
                    j["B"] = rep.B;
                    j["beta_minus"] = rep.beta_minus;
                    j["beta_f"] = rep.beta_f;
                    j["beta_plus"] = rep.beta_plus;
                    j["B_plus"] = rep.B_cap;  // field where the region curves meet
                    j["region"] = rep.region == PhaseRegion::Unique         ? "UNIQUE"
                                  : rep.region == PhaseRegion::BoundaryF    ? "BOUNDARY_F"
                                  : rep.region == PhaseRegion::BoundaryPlus ? "BOUNDARY_PLUS"
                                                                            : "NONUNIQUE";
                    j["r_free"] = rep.r_free;
                    j["r_ordered"] = rep.r_ordered;
                    if (rep.r_middle) j["r_middle"] = *rep.r_middle;
                    j["phi_free"] = rep.phi_free;
                    j["phi_ordered"] = rep.phi_ordered;
                    j["lower"] = rep.lower;
                    j["upper"] = rep.upper;
                    emit(j.dump(2), p_out);
                }
            } else if (p_family == "hardcore") {
                json j;
                j["lambda_c"] = hardcore_lambda_c(p_d);
                json table = json::array();
                for (double lam : parse_grid(p_lambda_grid)) {
                    auto hp = hardcore_phi(p_d, lam);
                    table.push_back({{"lambda", lam},
                                     {"phi", hp.phi},
                                     {"u", hp.u},
                                     {"outside_uniqueness", hp.outside_uniqueness}});
                }
                j["phi_table"] = table;
                emit(j.dump(2), p_out);
            } else if (p_family == "ising") {
                json j;
                auto basic = ising_phase(p_d, 0.0, 0.0);
                j["beta_minus"] = basic.beta_minus;
                json table = json::array();
                auto grid = p_beta_grid.empty() ? parse_grid("0:2:0.1") : parse_grid(p_beta_grid);
                for (double beta : grid) {
                    auto r = ising_phase(p_d, beta, p_B);
                    table.push_back({{"beta", beta},
                                     {"B", p_B},
                                     {"r_free", r.r_free},
                                     {"r_plus", r.r_plus},
                                     {"unique", r.unique},
                                     {"phi_free", r.phi_free},
                                     {"phi_plus", r.phi_plus}});
                }
                j["phi_table"] = table;
                emit(j.dump(2), p_out);
            } else {
                throw CavityError(ErrCode::InvalidParameter, "unknown family " + p_family);
            }
        } else if (*cmd_verify) {
            auto results = verify::run_all(thread_count(threads));
            bool all = true;
            for (const auto& r : results) {
                std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  [" << std::fixed
                          << std::setprecision(2) << r.seconds << "s]  " << r.detail << "\n";
                all = all && r.pass;
            }
            return all ? 0 : 1;
        }
    } catch (const CavityError& e) {
        std::cerr << err_prefix(e.code()) << " " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERR_NUMERIC " << e.what() << "\n";
        return 1;
    }
    return 0;
}
