// pam: build prime adjacency matrices from triple files, raise them to k
// hops, factorize values back into relations, and run the two evaluation
// pipelines (nearest-neighbor relation prediction, graph classification).

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <pam/pam.hpp>

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pam::IoError("cannot open " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

json input_entry(const std::string& path) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a64_file(path)));
    return json{{"path", path}, {"fnv1a64", hex}};
}

std::string resolve_out_dir(const std::string& flag_value, bool required) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("PAM_OUT_DIR"); env && *env) return env;
    if (required) throw pam::ArgumentError("no output directory: pass --out or set PAM_OUT_DIR");
    return {};
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pam::IoError("cannot open " + path + " for writing");
    out << content;
    out.flush();
    if (!out) throw pam::IoError("write to " + path + " failed");
}

void write_manifest(const std::string& dir, const std::string& subcommand, const json& inputs,
                    const json& config, const json& results, const json& timing) {
    json m{{"tool", "pam"},     {"version", kVersion}, {"compiler", __VERSION__},
           {"subcommand", subcommand}, {"inputs", inputs},   {"config", config},
           {"results", results}, {"timing", timing}};
    write_text(dir + "/manifest.json", m.dump(2) + "\n");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw pam::IoError("cannot create directory " + dir + ": " + ec.message());
}

pam::Aggregation parse_agg(const std::string& s) {
    if (s == "product") return pam::Aggregation::product;
    if (s == "sum") return pam::Aggregation::sum;
    throw pam::ArgumentError("unknown aggregation '" + s + "'");
}

// ---- build ----------------------------------------------------------------

struct BuildOpts {
    std::string input, out, scalar = "float", agg = "both";
    bool skip_two = true;
    uint64_t seed = 0;
    unsigned threads = 0;
};

template <typename T>
json build_matrices(const pam::KnowledgeGraph& g, const pam::RelationMapping& mapping,
                    const std::string& agg, const std::string& dir) {
    json res;
    if (agg == "product" || agg == "both") {
        auto p = pam::build_pam<T>(g, mapping, pam::Aggregation::product);
        pam::save_matrix_market(p.storage, dir + "/pam_product.mtx");
        res["product_nnz"] = p.nnz();
    }
    if (agg == "sum" || agg == "both") {
        auto p = pam::build_pam<T>(g, mapping, pam::Aggregation::sum);
        pam::save_matrix_market(p.storage, dir + "/pam_sum.mtx");
        res["sum_nnz"] = p.nnz();
    }
    return res;
}

int cmd_build(const BuildOpts& o) {
    Timer timer;
    const std::string dir = resolve_out_dir(o.out, true);
    ensure_dir(dir);
    pam::KnowledgeGraph g = pam::load_triples(o.input);
    auto mapping = pam::RelationMapping::build(g.relation_count, o.skip_two);
    json results = o.scalar == "int" ? build_matrices<mpz_class>(g, mapping, o.agg, dir)
                                     : build_matrices<double>(g, mapping, o.agg, dir);
    pam::save_mapping(mapping, g.relations.names(), dir + "/mapping.tsv");
    results["nodes"] = g.node_count;
    results["relations"] = g.relation_count;
    results["triples"] = g.triples.size();
    results["duplicates_dropped"] = g.duplicates_dropped;
    json config{{"input", o.input},     {"scalar", o.scalar}, {"agg", o.agg},
                {"skip_two", o.skip_two}, {"seed", o.seed},     {"threads", o.threads}};
    write_manifest(dir, "build", json::array({input_entry(o.input)}), config, results,
                   json{{"total_seconds", timer.seconds()}});
    std::cout << results.dump(2) << "\n";
    return 0;
}

// ---- power ----------------------------------------------------------------

struct PowerOpts {
    std::string input, out, scalar = "float", agg = "sum";
    uint32_t hops = 5;
    bool skip_two = true;
    uint64_t seed = 0;
    unsigned threads = 0;
};

template <typename T>
std::pair<json, std::vector<double>> power_stack_to_disk(const pam::KnowledgeGraph& g,
                                                         const pam::RelationMapping& mapping,
                                                         const PowerOpts& o, const std::string& dir) {
    auto base = pam::build_pam<T>(g, mapping, parse_agg(o.agg));
    std::vector<double> hop_seconds;
    pam::PowerOptions popts;
    popts.threads = o.threads;
    popts.hop_seconds = &hop_seconds;
    auto stack = pam::compute_powers(base, o.hops, popts);
    for (uint32_t hop = 1; hop <= stack.max_hop; ++hop) {
        pam::save_matrix_market(stack.at_hop(hop).storage,
                                dir + "/p" + std::to_string(hop) + ".mtx");
    }
    return {pam::stack_manifest(stack), hop_seconds};
}

int cmd_power(const PowerOpts& o) {
    Timer timer;
    const std::string dir = resolve_out_dir(o.out, true);
    ensure_dir(dir);
    pam::KnowledgeGraph g = pam::load_triples(o.input);
    auto mapping = pam::RelationMapping::build(g.relation_count, o.skip_two);
    auto [results, hop_seconds] = o.scalar == "int"
                                      ? power_stack_to_disk<mpz_class>(g, mapping, o, dir)
                                      : power_stack_to_disk<double>(g, mapping, o, dir);
    pam::save_mapping(mapping, g.relations.names(), dir + "/mapping.tsv");
    json config{{"input", o.input}, {"hops", o.hops},         {"scalar", o.scalar},
                {"agg", o.agg},     {"skip_two", o.skip_two}, {"seed", o.seed},
                {"threads", o.threads}};
    write_manifest(dir, "power", json::array({input_entry(o.input)}), config, results,
                   json{{"total_seconds", timer.seconds()}, {"per_hop_seconds", hop_seconds}});
    std::cout << results.dump(2) << "\n";
    return 0;
}

// ---- factorize ------------------------------------------------------------

struct FactorizeOpts {
    std::string value, mapping_path, out;
};

int cmd_factorize(const FactorizeOpts& o) {
    Timer timer;
    pam::MappingFile mf = pam::load_mapping(o.mapping_path);
    mpz_class value;
    try {
        value = mpz_class(o.value);
    } catch (const std::exception&) {
        throw pam::ArgumentError("'" + o.value + "' is not an integer");
    }
    pam::Factorization f = pam::factorize_cell(value, mf.mapping);

    std::vector<std::string> names;
    for (const auto& [rel, count] : f.relations) {
        for (uint32_t c = 0; c < count; ++c) names.push_back(mf.names[rel]);
    }
    std::cout << "value: " << value.get_str() << "\n";
    std::cout << "relations: ";
    for (std::size_t i = 0; i < names.size(); ++i) std::cout << (i ? ", " : "") << names[i];
    std::cout << "\n";
    if (!f.complete()) std::cout << "residue: " << f.residue.get_str() << "\n";

    const std::string dir = resolve_out_dir(o.out, false);
    if (!dir.empty()) {
        ensure_dir(dir);
        json result{{"value", value.get_str()},
                    {"relations", names},
                    {"complete", f.complete()},
                    {"residue", f.residue.get_str()}};
        write_text(dir + "/factorize.json", result.dump(2) + "\n");
        write_manifest(dir, "factorize", json::array({input_entry(o.mapping_path)}),
                       json{{"value", o.value}, {"mapping", o.mapping_path}}, result,
                       json{{"total_seconds", timer.seconds()}});
    }
    return 0;
}

// ---- stats ----------------------------------------------------------------

struct StatsOpts {
    std::string input, out, scalar = "float", agg = "sum";
    uint32_t hops = 5;
    bool skip_two = true;
    uint64_t seed = 0;
    unsigned threads = 0;
};

template <typename T>
std::string histogram_key(const T& v);
template <>
std::string histogram_key<mpz_class>(const mpz_class& v) {
    return v.get_str();
}
template <>
std::string histogram_key<double>(const double& v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
json stats_json(const pam::KnowledgeGraph& g, const pam::RelationMapping& mapping,
                const StatsOpts& o) {
    auto base = pam::build_pam<T>(g, mapping, parse_agg(o.agg));
    pam::PowerOptions popts;
    popts.threads = o.threads;
    auto stack = pam::compute_powers(base, o.hops, popts);
    json out{{"graph",
              {{"nodes", g.node_count},
               {"relations", g.relation_count},
               {"triples", g.triples.size()},
               {"duplicates_dropped", g.duplicates_dropped}}},
             {"stack", pam::stack_manifest(stack)}};
    json distinct = json::array();
    for (uint32_t hop = 1; hop <= stack.max_hop; ++hop) {
        distinct.push_back(stack.at_hop(hop).value_histogram().size());
    }
    out["distinct_values_per_hop"] = distinct;
    auto h1 = stack.at_hop(1).value_histogram();
    if (h1.size() <= 100) {
        json hist = json::object();
        for (const auto& [v, c] : h1) hist[histogram_key<T>(v)] = c;
        out["hop1_histogram"] = hist;
    }
    return out;
}

int cmd_stats(const StatsOpts& o) {
    Timer timer;
    pam::KnowledgeGraph g = pam::load_triples(o.input);
    auto mapping = pam::RelationMapping::build(g.relation_count, o.skip_two);
    json results = o.scalar == "int" ? stats_json<mpz_class>(g, mapping, o)
                                     : stats_json<double>(g, mapping, o);
    std::cout << results.dump(2) << "\n";
    const std::string dir = resolve_out_dir(o.out, false);
    if (!dir.empty()) {
        ensure_dir(dir);
        write_text(dir + "/stats.json", results.dump(2) + "\n");
        json config{{"input", o.input}, {"hops", o.hops},         {"scalar", o.scalar},
                    {"agg", o.agg},     {"skip_two", o.skip_two}, {"seed", o.seed},
                    {"threads", o.threads}};
        write_manifest(dir, "stats", json::array({input_entry(o.input)}), config, results,
                       json{{"total_seconds", timer.seconds()}});
    }
    return 0;
}

// ---- relpred ----------------------------------------------------------------

struct RelpredOpts {
    std::string train, test, valid, out, scalar = "float";
    uint32_t hops = 5;
    uint32_t k_neighbors = 0;  // 0 = pick on validation split when given, else 5
    std::vector<uint32_t> cutoffs = {1, 3};
    bool skip_two = true;
    bool one_hot = true;
    bool exclude_exact = false;
    uint64_t seed = 0;
    unsigned threads = 0;
};

template <typename T>
json run_relpred(const RelpredOpts& o, json& results) {
    pam::KnowledgeGraph train = pam::load_triples(o.train);
    pam::KnowledgeGraph test = pam::load_triples(o.test, pam::VocabPolicy::extend, &train);
    auto mapping = pam::RelationMapping::build(train.relation_count, o.skip_two);
    auto base = pam::build_pam<T>(train, mapping, pam::Aggregation::sum);
    pam::PowerOptions popts;
    popts.threads = o.threads;
    auto stack = pam::compute_powers(base, o.hops, popts);
    auto index = pam::build_index(stack, train.triples, o.one_hot);

    uint32_t k_n = o.k_neighbors;
    if (k_n == 0) {
        k_n = 5;
        if (!o.valid.empty()) {
            pam::KnowledgeGraph valid = pam::load_triples(o.valid, pam::VocabPolicy::extend, &train);
            k_n = pam::select_k_neighbors(index, stack, valid.triples, {1, 3, 5, 10, 20}, o.threads);
        }
    }
    pam::EvalReport report =
        pam::evaluate(index, stack, test.triples, k_n, o.cutoffs, o.threads, o.exclude_exact);
    results = pam::to_json(report);
    results["train_triples"] = train.triples.size();
    results["nodes"] = train.node_count;
    results["relations"] = train.relation_count;
    return results;
}

int cmd_relpred(const RelpredOpts& o) {
    Timer timer;
    const std::string dir = resolve_out_dir(o.out, true);
    ensure_dir(dir);
    json results;
    if (o.scalar == "int") run_relpred<mpz_class>(o, results);
    else run_relpred<double>(o, results);
    write_text(dir + "/report.json", results.dump(2) + "\n");
    json inputs = json::array({input_entry(o.train), input_entry(o.test)});
    if (!o.valid.empty()) inputs.push_back(input_entry(o.valid));
    json config{{"train", o.train},     {"test", o.test},
                {"valid", o.valid},     {"hops", o.hops},
                {"scalar", o.scalar},   {"k_neighbors", o.k_neighbors},
                {"cutoffs", o.cutoffs}, {"skip_two", o.skip_two},
                {"one_hot", o.one_hot}, {"exclude_exact", o.exclude_exact},
                {"seed", o.seed},       {"threads", o.threads}};
    write_manifest(dir, "relpred", inputs, config, results,
                   json{{"total_seconds", timer.seconds()}});
    std::cout << results.dump(2) << "\n";
    return 0;
}

// ---- graphclass -------------------------------------------------------------

struct GraphclassOpts {
    std::string dataset, out, scalar = "float", kernel = "pp";
    uint32_t hops = 5;
    uint32_t outer_folds = 5, inner_folds = 3;
    std::vector<double> gamma_grid = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    bool skip_two = true;
    bool export_kernel = false;
    uint64_t seed = 0;
    unsigned threads = 0;
};

int cmd_graphclass(const GraphclassOpts& o) {
    Timer timer;
    const std::string dir = resolve_out_dir(o.out, true);
    ensure_dir(dir);
    pam::GraphCollection collection = pam::load_tudataset(o.dataset);
    auto mapping =
        pam::RelationMapping::build(static_cast<uint32_t>(collection.relation_vocab.size()), o.skip_two);

    std::vector<pam::KernelCandidate> candidates;
    if (o.kernel == "pp" || o.kernel == "pp-vh") {
        std::vector<pam::GraphFeature> features =
            o.scalar == "int"
                ? pam::collection_features<mpz_class>(collection, mapping, o.hops, o.threads)
                : pam::collection_features<double>(collection, mapping, o.hops, o.threads);
        candidates = pam::rbf_candidates(features, o.gamma_grid);
        if (o.kernel == "pp-vh") {
            pam::KernelMatrix vh = pam::vertex_histogram_kernel(collection.graphs);
            for (auto& cand : candidates) {
                cand.matrix = pam::combine_pp_vh(cand.matrix, vh);
                cand.name = "pp-vh(" + cand.name.substr(cand.name.find('(') + 1);
            }
        }
    } else if (o.kernel == "vh") {
        candidates.push_back({"vh", pam::vertex_histogram_kernel(collection.graphs)});
    } else {
        throw pam::ArgumentError("unknown kernel '" + o.kernel + "'");
    }

    pam::ClassificationReport report = pam::evaluate_classification(
        candidates, collection.graph_labels, o.c_grid, o.outer_folds, o.inner_folds, o.seed);
    json results = pam::to_json(report);
    results["dataset"] = std::filesystem::path(o.dataset).filename().string();
    results["kernel"] = o.kernel;
    results["graphs"] = collection.size();
    write_text(dir + "/report.json", results.dump(2) + "\n");
    if (o.export_kernel) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            pam::save_kernel_matrix_market(candidates[i].matrix,
                                           dir + "/kernel_" + std::to_string(i) + ".mtx");
        }
    }
    json config{{"dataset", o.dataset},       {"kernel", o.kernel},
                {"hops", o.hops},             {"scalar", o.scalar},
                {"gamma_grid", o.gamma_grid}, {"c_grid", o.c_grid},
                {"outer_folds", o.outer_folds}, {"inner_folds", o.inner_folds},
                {"skip_two", o.skip_two},     {"seed", o.seed},
                {"threads", o.threads}};
    write_manifest(dir, "graphclass", json::array(), config, results,
                   json{{"total_seconds", timer.seconds()}});
    std::cout << results.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prime adjacency matrix toolkit"};
    app.require_subcommand(1);

    BuildOpts build_opts;
    auto* build = app.add_subcommand("build", "build one-hop matrices from a triple file");
    build->add_option("--input", build_opts.input, "triple TSV file")->required();
    build->add_option("--out", build_opts.out, "output directory (or PAM_OUT_DIR)");
    build->add_option("--scalar", build_opts.scalar, "value type")
        ->check(CLI::IsMember({"int", "float"}));
    build->add_option("--agg", build_opts.agg, "aggregation of parallel edges")
        ->check(CLI::IsMember({"product", "sum", "both"}));
    build->add_flag("--skip-two,!--no-skip-two", build_opts.skip_two, "start primes at 3");
    build->add_option("--seed", build_opts.seed, "recorded seed");
    build->add_option("--threads", build_opts.threads, "worker threads (0 = all cores)");

    PowerOpts power_opts;
    auto* power = app.add_subcommand("power", "compute the k-hop power stack");
    power->add_option("--input", power_opts.input, "triple TSV file")->required();
    power->add_option("--out", power_opts.out, "output directory (or PAM_OUT_DIR)");
    power->add_option("--hops", power_opts.hops, "stack depth k")->check(CLI::PositiveNumber);
    power->add_option("--scalar", power_opts.scalar, "value type")
        ->check(CLI::IsMember({"int", "float"}));
    power->add_option("--agg", power_opts.agg, "aggregation of parallel edges")
        ->check(CLI::IsMember({"product", "sum"}));
    power->add_flag("--skip-two,!--no-skip-two", power_opts.skip_two, "start primes at 3");
    power->add_option("--seed", power_opts.seed, "recorded seed");
    power->add_option("--threads", power_opts.threads, "worker threads (0 = all cores)");

    FactorizeOpts fact_opts;
    auto* fact = app.add_subcommand("factorize", "split a matrix value into relations");
    fact->add_option("value", fact_opts.value, "integer value to factorize")->required();
    fact->add_option("--mapping", fact_opts.mapping_path, "mapping TSV file")->required();
    fact->add_option("--out", fact_opts.out, "optional output directory");

    StatsOpts stats_opts;
    auto* stats = app.add_subcommand("stats", "graph and stack statistics");
    stats->add_option("--input", stats_opts.input, "triple TSV file")->required();
    stats->add_option("--out", stats_opts.out, "optional output directory");
    stats->add_option("--hops", stats_opts.hops, "stack depth k")->check(CLI::PositiveNumber);
    stats->add_option("--scalar", stats_opts.scalar, "value type")
        ->check(CLI::IsMember({"int", "float"}));
    stats->add_option("--agg", stats_opts.agg, "aggregation of parallel edges")
        ->check(CLI::IsMember({"product", "sum"}));
    stats->add_flag("--skip-two,!--no-skip-two", stats_opts.skip_two, "start primes at 3");
    stats->add_option("--seed", stats_opts.seed, "recorded seed");
    stats->add_option("--threads", stats_opts.threads, "worker threads (0 = all cores)");

    RelpredOpts rel_opts;
    auto* rel = app.add_subcommand("relpred", "nearest-neighbor relation prediction");
    rel->add_option("--train", rel_opts.train, "training triple TSV")->required();
    rel->add_option("--test", rel_opts.test, "test triple TSV")->required();
    rel->add_option("--valid", rel_opts.valid, "validation triple TSV (tunes k_neighbors)");
    rel->add_option("--out", rel_opts.out, "output directory (or PAM_OUT_DIR)");
    rel->add_option("--hops", rel_opts.hops, "stack depth k")->check(CLI::PositiveNumber);
    rel->add_option("--scalar", rel_opts.scalar, "value type")
        ->check(CLI::IsMember({"int", "float"}));
    rel->add_option("--k-neighbors", rel_opts.k_neighbors, "neighbors per query (0 = auto)");
    rel->add_option("--cutoffs", rel_opts.cutoffs, "hits@c cutoffs")->delimiter(',');
    rel->add_flag("--skip-two,!--no-skip-two", rel_opts.skip_two, "start primes at 3");
    rel->add_flag("--one-hot,!--no-one-hot", rel_opts.one_hot, "compare encoded codes");
    rel->add_flag("--exclude-exact", rel_opts.exclude_exact, "skip training samples of the query pair");
    rel->add_option("--seed", rel_opts.seed, "recorded seed");
    rel->add_option("--threads", rel_opts.threads, "worker threads (0 = all cores)");

    GraphclassOpts gc_opts;
    auto* gc = app.add_subcommand("graphclass", "kernel graph classification");
    gc->add_option("--dataset", gc_opts.dataset, "TUDataset-style directory")->required();
    gc->add_option("--out", gc_opts.out, "output directory (or PAM_OUT_DIR)");
    gc->add_option("--kernel", gc_opts.kernel, "kernel family")
        ->check(CLI::IsMember({"pp", "vh", "pp-vh"}));
    gc->add_option("--hops", gc_opts.hops, "stack depth k")->check(CLI::PositiveNumber);
    gc->add_option("--scalar", gc_opts.scalar, "value type")->check(CLI::IsMember({"int", "float"}));
    gc->add_option("--gamma-grid", gc_opts.gamma_grid, "RBF widths to search")->delimiter(',');
    gc->add_option("--c-grid", gc_opts.c_grid, "box constraints to search")->delimiter(',');
    gc->add_option("--outer-folds", gc_opts.outer_folds, "evaluation folds")
        ->check(CLI::PositiveNumber);
    gc->add_option("--inner-folds", gc_opts.inner_folds, "tuning folds")->check(CLI::PositiveNumber);
    gc->add_flag("--skip-two,!--no-skip-two", gc_opts.skip_two, "start primes at 3");
    gc->add_flag("--export-kernel", gc_opts.export_kernel, "write kernel matrices");
    gc->add_option("--seed", gc_opts.seed, "fold shuffle seed");
    gc->add_option("--threads", gc_opts.threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (build->parsed()) return cmd_build(build_opts);
        if (power->parsed()) return cmd_power(power_opts);
        if (fact->parsed()) return cmd_factorize(fact_opts);
        if (stats->parsed()) return cmd_stats(stats_opts);
        if (rel->parsed()) return cmd_relpred(rel_opts);
        if (gc->parsed()) return cmd_graphclass(gc_opts);
        std::cerr << app.help() << "\n";
        return 2;
    } catch (const pam::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pam::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pam::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pam::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
