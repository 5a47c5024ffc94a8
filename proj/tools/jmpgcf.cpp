// Command-line driver: layer selection, stacked training, evaluation and prediction.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jmpgcf/jmpgcf.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace jmpgcf;

namespace {

struct RunConfig {
    std::string data_dir;
    std::string output_dir = ".";
    std::string config_file;
    std::size_t embed_dim = 64;
    std::size_t batch_size = 2048;
    double learning_rate = 1e-3;
    double l2_coeff = 1e-4;
    double c = 0.1;
    int K = 2;
    double alpha = 0.5;
    std::size_t sample_size = 100;
    int max_hops = 16;
    std::size_t epochs_per_phase = 300;
    std::size_t topk = 20;
    std::uint64_t seed = 0;
    std::string optimizer = "adam";
    bool shared_base = false;
    std::vector<double> lambda_weights;
    int workers = 0;
    int l_odd = 0;
    int l_even = 0;
    std::size_t eval_every = 0;
    double validation_fraction = 0.0;
    std::string reg_scope = "batch_rows";
    std::string checkpoint;
    std::uint64_t user = 0;
    bool topk_sweep = false;
    bool remap = false;
};

// Usage problems detected after argument parsing; mapped to exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

std::string trim(std::string s) {
    auto blank = [](unsigned char ch) { return std::isspace(ch) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), blank));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), blank).base(), s.end());
    return s;
}

// Flat key=value file. Values only reach options that were not given on the
// command line, so flags win over the file and the file wins over defaults.
void apply_config_file(CLI::App& cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path, line_no, "expected key=value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) {
            return ch == '_' ? '-' : static_cast<char>(std::tolower(ch));
        });
        key.erase(0, key.find_first_not_of('-'));
        if (key == "config") throw ParseError(path, line_no, "config files cannot be nested");
        CLI::Option* opt = cmd.get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw ParseError(path, line_no, "unknown key '" + key + "' for '" + cmd.get_name() + "'");
        if (opt->count() > 0) continue;
        if (opt->get_items_expected_max() > 1) {
            std::string token;
            std::istringstream values(value);
            while (values >> token) {
                token.erase(std::remove(token.begin(), token.end(), ','), token.end());
                if (!token.empty()) opt->add_result(token);
            }
        } else {
            opt->add_result(value);
        }
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ParseError(path, line_no, "bad value for '" + key + "': " + e.what());
        }
    }
}

struct Options {
    CLI::App* cmd;
    RunConfig* cfg;

    Options& data() {
        cmd->add_option("--data-dir", cfg->data_dir, "Directory holding train.txt and test.txt")
            ->required();
        cmd->add_flag("--remap", cfg->remap, "Map raw user/item ids to dense indices");
        return *this;
    }
    Options& output() {
        cmd->add_option("--output-dir", cfg->output_dir, "Directory for produced files")
            ->capture_default_str();
        return *this;
    }
    Options& selection() {
        cmd->add_option("--alpha", cfg->alpha, "Coverage threshold")->capture_default_str();
        cmd->add_option("--sample-size", cfg->sample_size, "Users sampled for coverage")
            ->capture_default_str();
        cmd->add_option("--max-hops", cfg->max_hops, "Deepest hop examined")->capture_default_str();
        return *this;
    }
    Options& model() {
        cmd->add_option("--embed-dim", cfg->embed_dim, "Embedding dimension")->capture_default_str();
        cmd->add_option("--c", cfg->c, "Popularity unit")->capture_default_str();
        cmd->add_option("--k", cfg->K, "Largest popularity granularity")->capture_default_str();
        cmd->add_option("--lambda-weights", cfg->lambda_weights,
                        "Per-granularity score weights (K+1 values, default all 1)");
        cmd->add_option("--l-odd", cfg->l_odd, "Odd propagation layer (overrides layers.json)");
        cmd->add_option("--l-even", cfg->l_even, "Even propagation layer (overrides layers.json)");
        return *this;
    }
    Options& training() {
        cmd->add_option("--batch-size", cfg->batch_size, "Triples per step")->capture_default_str();
        cmd->add_option("--learning-rate", cfg->learning_rate, "Step size")->capture_default_str();
        cmd->add_option("--l2-coeff", cfg->l2_coeff, "Regularization coefficient")
            ->capture_default_str();
        cmd->add_option("--epochs-per-phase", cfg->epochs_per_phase, "Epochs in each phase")
            ->capture_default_str();
        cmd->add_option("--optimizer", cfg->optimizer, "adam or sgd")->capture_default_str();
        cmd->add_flag("--shared-base", cfg->shared_base, "One base table for every granularity");
        cmd->add_option("--reg-scope", cfg->reg_scope, "batch_rows or full_matrix")
            ->capture_default_str();
        cmd->add_option("--eval-every", cfg->eval_every, "Epochs between metric passes (0 = never)")
            ->capture_default_str();
        cmd->add_option("--validation-fraction", cfg->validation_fraction,
                        "Share of each user's training items held out for monitoring");
        return *this;
    }
    Options& ranking() {
        cmd->add_option("--topk", cfg->topk, "Cutoff K")->capture_default_str();
        return *this;
    }
    Options& checkpoint() {
        cmd->add_option("--checkpoint", cfg->checkpoint,
                        "Checkpoint file (default <output-dir>/checkpoint.bin)");
        return *this;
    }
    Options& common() {
        cmd->add_option("--seed", cfg->seed, "Random seed")->capture_default_str();
        cmd->add_option("--workers", cfg->workers, "Worker threads (0 = runtime default)");
        cmd->add_option("--config", cfg->config_file, "key=value file with option defaults");
        return *this;
    }
};

fs::path output_dir(const RunConfig& cfg) {
    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

struct Data {
    InteractionDataset ds;
    std::optional<IdMapping> mapping;
};

void print_statistics(const InteractionDataset& ds) {
    const double cells = static_cast<double>(ds.num_users) * static_cast<double>(ds.num_items);
    std::cout << ds.num_users << " users, " << ds.num_items << " items, " << ds.num_train_interactions
              << " training and " << ds.num_test_interactions() << " test interactions, density "
              << (cells > 0 ? static_cast<double>(ds.num_train_interactions + ds.num_test_interactions()) / cells : 0.0)
              << '\n';
}

Data load_data(const RunConfig& cfg) {
    const fs::path dir(cfg.data_dir);
    if (!fs::is_directory(dir)) throw UsageError("data directory not found: " + dir.string());
    for (const char* name : {"train.txt", "test.txt"})
        if (!fs::exists(dir / name))
            throw UsageError("missing " + std::string(name) + " in " + dir.string());
    if (cfg.remap) {
        auto loaded = load_dataset_remapped(dir / "train.txt", dir / "test.txt");
        const fs::path out = output_dir(cfg);
        std::ofstream users(out / "user_mapping.txt");
        write_id_mapping(users, loaded.mapping.users);
        std::ofstream items(out / "item_mapping.txt");
        write_id_mapping(items, loaded.mapping.items);
        if (!users || !items) throw Error("cannot write id mapping files in " + out.string());
        return {std::move(loaded.dataset), std::move(loaded.mapping)};
    }
    return {load_dataset(dir / "train.txt", dir / "test.txt"), std::nullopt};
}

fs::path checkpoint_path(const RunConfig& cfg) {
    return cfg.checkpoint.empty() ? fs::path(cfg.output_dir) / "checkpoint.bin" : fs::path(cfg.checkpoint);
}

std::vector<double> lambda_for(const RunConfig& cfg, int K) {
    if (cfg.lambda_weights.empty()) return std::vector<double>(static_cast<std::size_t>(K) + 1, 1.0);
    if (cfg.lambda_weights.size() != static_cast<std::size_t>(K) + 1)
        throw ConfigError("--lambda-weights needs " + std::to_string(K + 1) + " values, got " +
                          std::to_string(cfg.lambda_weights.size()));
    return cfg.lambda_weights;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) throw Error("cannot write " + path.string());
}

SelectedLayers resolve_layers(const RunConfig& cfg) {
    if (cfg.l_odd != 0 || cfg.l_even != 0) {
        if (cfg.l_odd == 0 || cfg.l_even == 0)
            throw UsageError("--l-odd and --l-even must be given together");
        SelectedLayers layers{cfg.l_odd, cfg.l_even};
        layers.validate();
        return layers;
    }
    const fs::path path = fs::path(cfg.output_dir) / "layers.json";
    std::ifstream in(path);
    if (!in)
        throw UsageError("no layers given: run select-layers first or pass --l-odd/--l-even (looked for " +
                         path.string() + ")");
    json j;
    try {
        in >> j;
        SelectedLayers layers{j.at("l_odd").get<int>(), j.at("l_even").get<int>()};
        layers.validate();
        return layers;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- select-layers

int cmd_select_layers(const RunConfig& cfg) {
    const auto data = load_data(cfg);
    print_statistics(data.ds);
    LayerSelectionConfig sel{cfg.alpha, cfg.sample_size, cfg.max_hops, cfg.seed};
    LayerSelectionReport report;
    try {
        report = select_layers(data.ds, sel);
    } catch (const LayerSelectionFailure& e) {
        std::cerr << format_coverage(e.coverage());
        throw;
    }
    std::cout << format_coverage(report.coverage);
    std::cout << "selected layers: odd=" << report.layers.odd << " even=" << report.layers.even << '\n';

    json coverage = json::array();
    for (const auto& c : report.coverage) coverage.push_back({{"hop", c.hop}, {"coverage", c.coverage}});
    write_json(output_dir(cfg) / "layers.json", {{"l_odd", report.layers.odd},
                                                 {"l_even", report.layers.even},
                                                 {"alpha", cfg.alpha},
                                                 {"sampled_users", report.sampled_users.size()},
                                                 {"coverage", coverage}});
    return 0;
}

// ---------------------------------------------------------------- train

RegularizationScope parse_scope(const std::string& s) {
    if (s == "batch_rows") return RegularizationScope::batch_rows;
    if (s == "full_matrix") return RegularizationScope::full_matrix;
    throw ConfigError("unknown regularization scope '" + s + "' (expected batch_rows or full_matrix)");
}

int cmd_train(const RunConfig& cfg) {
    const auto data = load_data(cfg);
    print_statistics(data.ds);
    const auto layers = resolve_layers(cfg);
    auto popularity = PopularityConfig::with_uniform_weights(cfg.c, cfg.K);
    popularity.granularity_weights = lambda_for(cfg, cfg.K);
    popularity.validate();

    TrainConfig tc;
    tc.optimizer.kind = parse_optimizer(cfg.optimizer);
    tc.optimizer.learning_rate = cfg.learning_rate;
    tc.l2_coeff = cfg.l2_coeff;
    tc.batch_size = cfg.batch_size;
    tc.seed = cfg.seed;
    tc.reg_scope = parse_scope(cfg.reg_scope);
    tc.shared_base = cfg.shared_base;
    tc.eval_every = cfg.eval_every;
    tc.topk = cfg.topk;
    tc.validate();
    const auto schedule = PhaseSchedule::uniform(cfg.K, cfg.epochs_per_phase);
    schedule.validate();

    // Training runs on `fit`; `monitor` supplies the lists scored every eval_every epochs.
    InteractionDataset fit = data.ds;
    InteractionDataset monitor = data.ds;
    if (cfg.validation_fraction > 0.0) {
        auto [reduced, validation] = split_validation(data.ds, cfg.validation_fraction, cfg.seed);
        fit = std::move(reduced);
        monitor = std::move(validation);
    }

    const fs::path out_dir = output_dir(cfg);
    const auto mats = build_propagation_matrices(fit, popularity);
    auto params = init_parameters(fit.num_users, fit.num_items, cfg.embed_dim, popularity, cfg.seed,
                                  cfg.shared_base);

    std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics) throw Error("cannot write " + (out_dir / "metrics.jsonl").string());
    const std::string recall_key = "recall@" + std::to_string(cfg.topk);
    const std::string ndcg_key = "ndcg@" + std::to_string(cfg.topk);

    Trainer trainer(fit, mats, params, layers, schedule, tc);
    if (cfg.eval_every > 0) trainer.set_validation(&monitor);
    std::cout << "training " << schedule.num_phases() << " phase(s), " << trainer.steps_per_epoch()
              << " step(s) per epoch, layers odd=" << layers.odd << " even=" << layers.even << '\n';

    trainer.on_epoch = [&](const EpochRecord& r) {
        json line = {{"phase", r.phase}, {"epoch", r.epoch}, {"loss", r.loss}};
        line[recall_key] = r.metrics ? json(r.metrics->recall) : json(nullptr);
        line[ndcg_key] = r.metrics ? json(r.metrics->ndcg) : json(nullptr);
        line["wallclock_s"] = r.wallclock_s;
        metrics << line.dump() << '\n' << std::flush;

        std::cout << "phase " << r.phase << " epoch " << r.epoch << " loss " << r.loss;
        if (r.metrics) std::cout << ' ' << recall_key << ' ' << r.metrics->recall << ' ' << ndcg_key << ' ' << r.metrics->ndcg;
        std::cout << '\n';
    };
    fs::path last_checkpoint;
    trainer.on_phase_end = [&](int phase, int epoch, const ModelParameters& p) {
        const CheckpointMeta meta{layers, phase, epoch};
        last_checkpoint = out_dir / ("checkpoint_phase" + std::to_string(phase) + ".bin");
        save_checkpoint(last_checkpoint, p, meta);
        if (phase == schedule.num_phases()) {
            last_checkpoint = checkpoint_path(cfg);
            save_checkpoint(last_checkpoint, p, meta);
        }
    };

    try {
        trainer.run();
    } catch (const NumericalError& e) {
        std::cerr << "training aborted: " << e.what() << '\n';
        std::cerr << (last_checkpoint.empty() ? std::string("no checkpoint was written")
                                              : "last good checkpoint: " + last_checkpoint.string())
                  << '\n';
        return 1;
    }
    std::cout << "wrote " << last_checkpoint.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- evaluate / predict

struct LoadedModel {
    Checkpoint ck;
    PropagationOutput out;
};

LoadedModel load_model(const RunConfig& cfg, const CLI::App& cmd, const InteractionDataset& ds) {
    auto ck = load_checkpoint(checkpoint_path(cfg));
    auto& p = ck.params;
    const bool dim_given = cmd.get_option("--embed-dim")->count() > 0;
    if (p.num_users != ds.num_users || p.num_items != ds.num_items ||
        (dim_given && p.embed_dim != cfg.embed_dim)) {
        std::ostringstream msg;
        msg << "checkpoint shape m=" << p.num_users << ", n=" << p.num_items
            << ", embed_dim=" << p.embed_dim << " does not match dataset m=" << ds.num_users
            << ", n=" << ds.num_items;
        if (dim_given) msg << ", embed_dim=" << cfg.embed_dim;
        throw DimensionError(msg.str());
    }
    p.popularity.granularity_weights = lambda_for(cfg, p.max_granularity());
    p.validate();
    const auto mats = build_propagation_matrices(ds, p.popularity);
    auto out = propagate(p, mats, ck.meta.layers);
    return {std::move(ck), std::move(out)};
}

int cmd_evaluate(const RunConfig& cfg, const CLI::App& cmd) {
    const auto data = load_data(cfg);
    const auto model = load_model(cfg, cmd, data.ds);
    const auto& weights = model.ck.params.popularity.granularity_weights;
    const auto report = evaluate(model.out, data.ds, cfg.topk, weights);

    const std::string k = std::to_string(report.k);
    const fs::path out_dir = output_dir(cfg);
    write_json(out_dir / "report.json", {{"k", report.k},
                                         {"recall@" + k, report.recall},
                                         {"ndcg@" + k, report.ndcg},
                                         {"num_users_evaluated", report.num_users_evaluated},
                                         {"phase", model.ck.meta.phase},
                                         {"epoch", model.ck.meta.epoch},
                                         {"l_odd", model.ck.meta.layers.odd},
                                         {"l_even", model.ck.meta.layers.even}});
    std::cout << std::left << std::setw(16) << "metric" << "value\n"
              << std::setw(16) << ("recall@" + k) << std::setprecision(6) << std::fixed << report.recall << '\n'
              << std::setw(16) << ("ndcg@" + k) << report.ndcg << '\n'
              << std::setw(16) << "users" << report.num_users_evaluated << '\n';

    if (cfg.topk_sweep) {
        std::vector<std::size_t> cutoffs;
        for (std::size_t c = 5; c <= 40; c += 5) cutoffs.push_back(c);
        const auto sweep = evaluate_lists(model.out, data.ds.test, data.ds.train, cutoffs, weights);
        std::ofstream csv(out_dir / "topk_sweep.csv");
        csv << "k,recall,ndcg\n" << std::setprecision(17);
        for (const auto& r : sweep) csv << r.k << ',' << r.recall << ',' << r.ndcg << '\n';
        if (!csv) throw Error("cannot write " + (out_dir / "topk_sweep.csv").string());
        std::cout << "wrote " << (out_dir / "topk_sweep.csv").string() << '\n';
    }
    return 0;
}

int cmd_predict(const RunConfig& cfg, const CLI::App& cmd) {
    const auto data = load_data(cfg);
    Index user = 0;
    if (data.mapping) {
        const auto& users = data.mapping->users;
        const auto it = std::find(users.begin(), users.end(), cfg.user);
        if (it == users.end()) throw ConfigError("unknown user id " + std::to_string(cfg.user));
        user = static_cast<Index>(it - users.begin());
    } else {
        if (cfg.user >= data.ds.num_users)
            throw ConfigError("unknown user index " + std::to_string(cfg.user) + " (dataset has " +
                              std::to_string(data.ds.num_users) + " users)");
        user = static_cast<Index>(cfg.user);
    }
    const auto model = load_model(cfg, cmd, data.ds);
    const auto scores =
        score_all_items(model.out, user, model.ck.params.popularity.granularity_weights);
    const auto top = rank_user(scores, data.ds.train[user], cfg.topk);
    if (top.empty()) {
        std::cerr << "warning: user " << cfg.user << " has interacted with every item; nothing to recommend\n";
        return 0;
    }
    std::cout << "rank item score\n" << std::setprecision(6) << std::fixed;
    for (std::size_t r = 0; r < top.size(); ++r) {
        const std::uint64_t item = data.mapping ? data.mapping->items[top[r]] : top[r];
        std::cout << r + 1 << ' ' << item << ' ' << scores[top[r]] << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-grained popularity-aware graph convolution recommender"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto* sel = app.add_subcommand("select-layers", "Pick the odd/even propagation layers");
    Options{sel, &cfg}.data().output().selection().common();
    auto* train = app.add_subcommand("train", "Run the multistage stacked training");
    Options{train, &cfg}.data().output().model().training().ranking().common();
    auto* eval = app.add_subcommand("evaluate", "Full-ranking Recall@K / NDCG@K on the test split");
    Options{eval, &cfg}.data().output().model().ranking().checkpoint().common();
    eval->add_flag("--topk-sweep", cfg.topk_sweep, "Also write topk_sweep.csv for K = 5..40");
    auto* predict = app.add_subcommand("predict", "Top-K recommendations for one user");
    Options{predict, &cfg}.data().output().model().ranking().checkpoint().common();
    predict->add_option("--user", cfg.user, "User index (or raw id with --remap)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* cmd = app.get_subcommands().front();
    try {
        if (!cfg.config_file.empty()) apply_config_file(*cmd, cfg.config_file);
        if (cfg.workers < 0) throw UsageError("--workers must be non-negative");
        if (cfg.workers > 0) set_workers(cfg.workers);

        if (cmd == sel) return cmd_select_layers(cfg);
        if (cmd == train) return cmd_train(cfg);
        if (cmd == eval) return cmd_evaluate(cfg, *cmd);
        return cmd_predict(cfg, *cmd);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        // malformed config files are usage errors; malformed data files are runtime failures
        std::cerr << "error: " << e.what() << '\n';
        return e.file() == cfg.config_file ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
