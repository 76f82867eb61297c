#pragma once

// Config-driven experiments: flat key=value files in, CSV and text artifacts out.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "agent.hpp"
#include "env.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "metrics.hpp"
#include "options.hpp"
#include "spectral.hpp"

namespace diffopt {

struct ExperimentConfig {
    std::string name;
    std::filesystem::path domain_map;
    std::optional<Wind> wind;
    OptionMethod method = OptionMethod::Diffusion;
    std::optional<double> t;
    std::optional<int> k;
    LearningConfig learning;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    int trials_per_pair = 10;
    /// Text of the config file as read, hashed into the manifest.
    std::string source_text;

    std::string label() const { return name.empty() ? std::string(to_string(method)) : name; }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    std::istringstream in(value);
    in >> out;
    if (in.fail() || !in.eof()) {
        throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, value));
    }
    return out;
}

}  // namespace detail

/// Parses key=value lines; `#` starts a comment. Relative paths are resolved
/// against `base_dir`.
inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    cfg.source_text = std::string(text);
    std::optional<Action> wind_direction;
    std::optional<double> wind_probability;
    bool have_map = false;

    std::istringstream lines{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(fmt::format("config line {}: expected key=value", line_no));
        }
        const std::string key = detail::trim(std::string_view(body).substr(0, eq));
        const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        if (value.empty()) throw ConfigError(fmt::format("config key '{}' has no value", key));

        if (key == "name") {
            cfg.name = value;
        } else if (key == "domain_map") {
            cfg.domain_map = base_dir / value;
            have_map = true;
        } else if (key == "wind_direction") {
            wind_direction = parse_action(value);
            if (!wind_direction) throw ConfigError("unknown wind_direction '" + value + "'");
        } else if (key == "wind_probability") {
            wind_probability = detail::parse_number<double>(key, value);
        } else if (key == "method") {
            const auto m = parse_method(value);
            if (!m) throw ConfigError("unknown method '" + value + "'");
            cfg.method = *m;
        } else if (key == "t") {
            cfg.t = detail::parse_number<double>(key, value);
        } else if (key == "k") {
            cfg.k = detail::parse_number<int>(key, value);
        } else if (key == "alpha") {
            cfg.learning.alpha = detail::parse_number<double>(key, value);
        } else if (key == "gamma") {
            cfg.learning.gamma = detail::parse_number<double>(key, value);
        } else if (key == "episodes") {
            cfg.learning.episodes = detail::parse_number<int>(key, value);
        } else if (key == "max_steps_per_episode") {
            cfg.learning.max_steps_per_episode = detail::parse_number<int>(key, value);
        } else if (key == "default_steps_on_failure") {
            cfg.learning.default_steps_on_failure = detail::parse_number<int>(key, value);
        } else if (key == "monte_carlo_iterations") {
            cfg.learning.monte_carlo_iterations = detail::parse_number<int>(key, value);
        } else if (key == "seed") {
            cfg.seed = detail::parse_number<std::uint64_t>(key, value);
        } else if (key == "output_dir") {
            cfg.output_dir = base_dir / value;
        } else if (key == "trials_per_pair") {
            cfg.trials_per_pair = detail::parse_number<int>(key, value);
        } else {
            throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
        }
    }

    if (!have_map) throw ConfigError("config is missing domain_map");
    if (!std::filesystem::is_regular_file(cfg.domain_map)) {
        throw ConfigError("map file not found: " + cfg.domain_map.string());
    }
    if (wind_probability) {
        if (!(*wind_probability >= 0.0 && *wind_probability <= 1.0)) {
            throw ConfigError("wind_probability must lie in [0, 1]");
        }
        cfg.wind = Wind{wind_direction.value_or(Action::Down), *wind_probability};
    } else if (wind_direction) {
        throw ConfigError("wind_direction given without wind_probability");
    }
    switch (cfg.method) {
        case OptionMethod::Diffusion:
            if (!cfg.t || !(*cfg.t >= 1.0)) throw ConfigError("method diffusion needs t >= 1");
            break;
        case OptionMethod::Eigen:
        case OptionMethod::Cover:
        case OptionMethod::Random:
            if (!cfg.k || *cfg.k < 1) {
                throw ConfigError(fmt::format("method {} needs k >= 1", to_string(cfg.method)));
            }
            break;
        case OptionMethod::None: break;
    }
    if (cfg.trials_per_pair < 1) throw ConfigError("trials_per_pair must be >= 1");
    try {
        cfg.learning.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file not found: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

/// Canonical key=value echo of the effective configuration.
inline std::string config_echo(const ExperimentConfig& cfg) {
    std::string out;
    out += fmt::format("name={}\n", cfg.label());
    out += fmt::format("domain_map={}\n", cfg.domain_map.filename().string());
    if (cfg.wind) {
        out += fmt::format("wind_direction={}\n", to_string(cfg.wind->direction));
        out += fmt::format("wind_probability={}\n", cfg.wind->probability);
    }
    out += fmt::format("method={}\n", to_string(cfg.method));
    if (cfg.t) out += fmt::format("t={}\n", *cfg.t);
    if (cfg.k) out += fmt::format("k={}\n", *cfg.k);
    out += fmt::format("alpha={}\ngamma={}\nepisodes={}\nmax_steps_per_episode={}\n",
                       cfg.learning.alpha, cfg.learning.gamma, cfg.learning.episodes,
                       cfg.learning.max_steps_per_episode);
    out += fmt::format("default_steps_on_failure={}\nmonte_carlo_iterations={}\n",
                       cfg.learning.default_steps_on_failure, cfg.learning.monte_carlo_iterations);
    out += fmt::format("seed={}\ntrials_per_pair={}\n", cfg.seed, cfg.trials_per_pair);
    return out;
}

/// SHA-1 of "blob <size>\0<content>", as git hashes file contents.
inline std::string git_blob_hash(std::string_view content) {
    const std::string header = fmt::format("blob {}", content.size());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw Error("cannot allocate digest context");
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, "\0", 1) == 1 &&
                    EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error("SHA-1 digest failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

/// Everything derived from a config that the subcommands share.
struct Experiment {
    ExperimentConfig cfg;
    Domain domain;
    StateGraph graph;

    explicit Experiment(ExperimentConfig c)
        : cfg(std::move(c)),
          domain(load_domain_file(cfg.domain_map, cfg.wind)),
          graph(domain.deterministic() ? build_state_graph(domain) : build_directed_graph(domain)) {}

    OptionSet options() const {
        switch (cfg.method) {
            case OptionMethod::Diffusion: return discover_diffusion_options(graph, *cfg.t);
            case OptionMethod::Eigen: return eigenoptions(graph, *cfg.k, cfg.learning.gamma);
            case OptionMethod::Cover: return cover_options(graph, *cfg.k);
            case OptionMethod::Random: {
                std::mt19937_64 rng(cfg.seed);
                OptionSet set = random_options(graph, *cfg.k, rng);
                set.params.seed = cfg.seed;
                return set;
            }
            case OptionMethod::None: break;
        }
        return OptionSet{};
    }

    std::vector<int> task_goals() const {
        std::vector<int> goals;
        for (const Cell& c : domain.goals()) goals.push_back(domain.state_of(c));
        if (goals.empty()) throw ConfigError("map has no goal cell 'G' for learning trials");
        return goals;
    }
};

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& file) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / file).string());
    return out;
}

inline void write_manifest(const Experiment& ex, const std::string& command,
                           const std::vector<std::string>& outputs) {
    auto out = open_output(ex.cfg.output_dir, "manifest.txt");
    out << "# experiment manifest\n";
    out << "command=" << command << '\n';
    out << config_echo(ex.cfg);
    out << "map_sha1=" << git_blob_hash(read_file(ex.cfg.domain_map)) << '\n';
    out << "config_sha1=" << git_blob_hash(ex.cfg.source_text) << '\n';
    out << "states=" << ex.domain.num_states() << '\n';
    for (const std::string& f : outputs) {
        out << "output=" << f << " sha1=" << git_blob_hash(read_file(ex.cfg.output_dir / f)) << '\n';
    }
}

struct RunOptions {
    int jobs = 1;
    bool dump_matrices = false;
};

inline std::vector<std::string> run_discover(const Experiment& ex, const OptionSet& set,
                                             const RunOptions& ro) {
    std::vector<std::string> written{"options.csv"};
    {
        auto out = open_output(ex.cfg.output_dir, "options.csv");
        write_options_csv(out, set, ex.graph);
    }
    if (ro.dump_matrices) {
        const WalkMatrices wm = walk_matrices(ex.graph);
        const WalkSpectrum sp = spectrum_of(wm);
        const std::pair<const char*, const Eigen::MatrixXd*> mats[] = {
            {"weights.csv", &ex.graph.weights},
            {"walk.csv", &wm.walk},
            {"laplacian.csv", &wm.laplacian},
            {"eigenvectors.csv", &sp.psi}};
        for (const auto& [file, m] : mats) {
            auto out = open_output(ex.cfg.output_dir, file);
            write_matrix_csv(out, *m);
            written.emplace_back(file);
        }
        auto out = open_output(ex.cfg.output_dir, "eigenvalues.csv");
        out << "index,nu,omega\n";
        for (int i = 0; i < sp.size(); ++i) {
            out << fmt::format("{},{},{}\n", i, sp.nus(i), sp.omegas(i));
        }
        written.emplace_back("eigenvalues.csv");
        if (ex.cfg.method == OptionMethod::Diffusion) {
            const ScoreField f = score_field(sp, *ex.cfg.t);
            auto fo = open_output(ex.cfg.output_dir, "score_field.csv");
            fo << "state,row,col,f\n";
            for (int s = 0; s < ex.graph.size(); ++s) {
                const Cell c = ex.graph.states[static_cast<std::size_t>(s)];
                fo << fmt::format("{},{},{},{}\n", s, c.row, c.col, f.values(s));
            }
            written.emplace_back("score_field.csv");
        }
    }
    return written;
}

inline std::vector<RunLog> run_learning(const Experiment& ex, const OptionSet& set,
                                        const RunOptions& ro) {
    const auto trials = plan_trials(ex.task_goals(), ex.cfg.learning, ex.cfg.seed);
    return run_trials(ex.domain, set, trials, ex.cfg.learning, ro.jobs);
}

inline std::vector<std::string> run_learn(const Experiment& ex, const OptionSet& set,
                                          const RunOptions& ro) {
    const auto logs = run_learning(ex, set, ro);
    const auto curve = learning_curve(logs, ex.cfg.learning.default_steps_on_failure);
    {
        auto out = open_output(ex.cfg.output_dir, "learning_curve.csv");
        write_learning_curve_csv(out, curve);
    }
    {
        auto out = open_output(ex.cfg.output_dir, "learning_curve.dat");
        write_learning_curve_dat(out, curve);
    }
    {
        auto out = open_output(ex.cfg.output_dir, "learning_runs.csv");
        write_runlogs_csv(out, logs);
    }
    {
        auto out = open_output(ex.cfg.output_dir, "visitation.csv");
        write_visitation_csv(out, ex.domain, logs);
    }
    return {"learning_curve.csv", "learning_curve.dat", "learning_runs.csv", "visitation.csv"};
}

inline PairStepsReport run_pair_report(const Experiment& ex, const OptionSet& set,
                                       const RunOptions& ro) {
    return steps_between_states(ex.domain, set, ex.cfg.seed, ex.cfg.trials_per_pair, ro.jobs);
}

inline std::vector<std::string> run_pairsteps(const Experiment& ex, const OptionSet& set,
                                              const RunOptions& ro) {
    const PairStepsReport r = run_pair_report(ex, set, ro);
    {
        auto out = open_output(ex.cfg.output_dir, "pair_steps.csv");
        write_pair_steps_csv(out, r);
    }
    {
        auto out = open_output(ex.cfg.output_dir, "pair_matrix.csv");
        write_pair_matrix_csv(out, r);
    }
    return {"pair_steps.csv", "pair_matrix.csv"};
}

inline std::vector<std::string> run_difficulty(const Experiment& ex) {
    const double value = domain_difficulty(spectrum_of(walk_matrices(ex.graph)), ex.graph);
    auto out = open_output(ex.cfg.output_dir, "difficulty.txt");
    out << "# domain difficulty: states x mean pairwise diffusion distance over t in 1..1000\n";
    out << "states=" << ex.domain.num_states() << '\n';
    out << "difficulty=" << fmt::format("{}", value) << '\n';
    return {"difficulty.txt"};
}

/// Every artifact for one config.
inline void run_experiment(const ExperimentConfig& cfg, const RunOptions& ro) {
    const Experiment ex(cfg);
    const OptionSet set = ex.options();
    std::vector<std::string> written = run_discover(ex, set, ro);
    for (auto part : {run_learn(ex, set, ro), run_pairsteps(ex, set, ro), run_difficulty(ex)}) {
        written.insert(written.end(), part.begin(), part.end());
    }
    write_manifest(ex, "run", written);
}

/// Learning curves and pair-step summaries of several configs side by side,
/// written to the first config's output directory.
inline void compare(const std::vector<ExperimentConfig>& cfgs, const RunOptions& ro) {
    if (cfgs.size() < 2) throw ConfigError("compare needs at least two configs");
    std::vector<Experiment> exps;
    for (const auto& c : cfgs) exps.emplace_back(c);
    const std::string map0 = read_file(exps.front().cfg.domain_map);
    for (const auto& ex : exps) {
        const auto& w0 = exps.front().cfg.wind;
        const auto& w = ex.cfg.wind;
        const bool same_wind = w0.has_value() == w.has_value() &&
                               (!w || (w->direction == w0->direction &&
                                       w->probability == w0->probability));
        if (read_file(ex.cfg.domain_map) != map0 || !same_wind) {
            throw DomainMismatch("config '" + ex.cfg.label() + "' uses a different domain than '" +
                                 exps.front().cfg.label() + "'");
        }
    }

    std::vector<std::vector<CurvePoint>> curves;
    std::vector<PairStepsReport> reports;
    for (const auto& ex : exps) {
        const OptionSet set = ex.options();
        curves.push_back(learning_curve(run_learning(ex, set, ro),
                                        ex.cfg.learning.default_steps_on_failure));
        reports.push_back(run_pair_report(ex, set, ro));
    }

    const auto& dir = exps.front().cfg.output_dir;
    {
        auto out = open_output(dir, "compare_learning.csv");
        out << "episode";
        for (const auto& ex : exps) out << ',' << ex.cfg.label() << "_mean_steps," << ex.cfg.label() << "_std_steps";
        out << '\n';
        std::size_t rows = 0;
        for (const auto& c : curves) rows = std::max(rows, c.size());
        for (std::size_t e = 0; e < rows; ++e) {
            out << e;
            for (const auto& c : curves) {
                if (e < c.size()) {
                    out << fmt::format(",{},{}", c[e].mean, c[e].std);
                } else {
                    out << ",,";
                }
            }
            out << '\n';
        }
    }
    {
        auto out = open_output(dir, "compare_pairsteps.csv");
        out << "name,method,t,options,pairs,median_steps,iqr_steps,mean_steps,std_steps\n";
        for (std::size_t i = 0; i < exps.size(); ++i) {
            const auto& r = reports[i];
            for (const auto& [tag, s] : {std::pair{"ordered", r.ordered}, std::pair{"unordered", r.unordered}}) {
                out << fmt::format("{},{},{},{},{},{},{},{},{}\n", exps[i].cfg.label(), r.method,
                                   r.t, r.option_count, tag, s.median, s.iqr, s.mean, s.std);
            }
        }
    }
}

}  // namespace diffopt
