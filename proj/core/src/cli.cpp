#include "simulmt/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "simulmt/checkpoint.hpp"
#include "simulmt/config.hpp"
#include "simulmt/evaluate.hpp"

namespace simulmt {

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config (INI)")->required();
    cmd->add_option("--set", opts.overrides, "override as section.key=value (repeatable)");
    cmd->add_option("--seed", opts.seed, "override run.seed");
}

ExperimentConfig load_config(const CommonOpts& opts) {
    std::vector<std::string> overrides = opts.overrides;
    if (opts.seed >= 0) overrides.push_back("run.seed=" + std::to_string(opts.seed));
    return ExperimentConfig::from_file(opts.config_path, overrides);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write output file " + path);
    return out;
}

Corpus load_split(const ExperimentConfig& cfg, const Vocabulary& vs, const Vocabulary& vt, const std::string& split,
                  int* dropped = nullptr) {
    LoadReport report =
        load_parallel(cfg.path(split, "src"), cfg.path(split, "tgt"), vs, vt, cfg.data.len_cap, split);
    if (dropped) *dropped = report.dropped_over_cap;
    return std::move(report.corpus);
}

struct LoadedEnv {
    ParamStore store;
    Vocabulary vocab_src;
    Vocabulary vocab_tgt;
    NmtConfig nmt_cfg;
};

LoadedEnv load_env(const ExperimentConfig& cfg, const std::string& env_ckpt) {
    LoadedEnv env;
    env.vocab_src = Vocabulary::load(cfg.path("vocab", "src"));
    env.vocab_tgt = Vocabulary::load(cfg.path("vocab", "tgt"));
    env.nmt_cfg =
        NmtConfig{env.vocab_src.size(), env.vocab_tgt.size(), cfg.env.emb_dim, cfg.env.hidden_dim, cfg.env.attn_dim};
    Rng scratch(0);
    NmtModel::register_params(env.nmt_cfg, env.store, scratch);
    load_into_store(load_checkpoint(env_ckpt), env.store);
    return env;
}

std::unique_ptr<DecisionPolicy> make_policy(const std::string& name, const AgentModel* agent) {
    if (name == "agent") {
        if (!agent) throw std::runtime_error("policy 'agent' needs --agent <checkpoint>");
        return std::make_unique<AgentPolicy>(*agent);
    }
    return make_heuristic_policy(parse_heuristic(name));
}

int cmd_gen_data(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.data.dir);
    SyntheticSpec spec = cfg.synthetic_spec();

    Vocabulary vocab;
    for (int t = 0; t < spec.vocab_size; ++t) vocab.add("w" + std::to_string(t));
    vocab.save(cfg.path("vocab", "src"));
    vocab.save(cfg.path("vocab", "tgt"));

    const std::vector<std::pair<std::string, int>> splits{
        {"train", cfg.data.n_train}, {"valid", cfg.data.n_valid}, {"test", cfg.data.n_test}};
    for (std::size_t i = 0; i < splits.size(); ++i) {
        spec.n_pairs = splits[i].second;
        Rng rng(derive_seed(cfg.seed, 0xDA7A, i));
        const auto text = generate_synthetic_text(spec, rng);
        std::vector<std::vector<std::string>> src, tgt;
        for (const auto& [s, t] : text) {
            src.push_back(s);
            tgt.push_back(t);
        }
        write_text_file(cfg.path(splits[i].first, "src"), src);
        write_text_file(cfg.path(splits[i].first, "tgt"), tgt);
    }
    std::cout << "gen-data: task " << cfg.data.task << ", " << cfg.data.n_train << "/" << cfg.data.n_valid << "/"
              << cfg.data.n_test << " pairs in " << cfg.data.dir << "\n";
    return 0;
}

int cmd_pretrain(const ExperimentConfig& cfg, const std::string& out_path, const std::string& log_path) {
    const Vocabulary vs = Vocabulary::load(cfg.path("vocab", "src"));
    const Vocabulary vt = Vocabulary::load(cfg.path("vocab", "tgt"));
    int dropped = 0;
    const Corpus train = load_split(cfg, vs, vt, "train", &dropped);
    if (dropped > 0) std::cout << "pretrain: dropped " << dropped << " over-cap pairs\n";
    const Corpus valid = load_split(cfg, vs, vt, "valid");

    ParamStore store;
    Rng init_rng(derive_seed(cfg.seed, 0xE2F));
    const NmtConfig nmt_cfg{vs.size(), vt.size(), cfg.env.emb_dim, cfg.env.hidden_dim, cfg.env.attn_dim};
    NmtModel env(nmt_cfg, store, init_rng);

    Rng train_rng(derive_seed(cfg.seed, 0x317A1));
    std::ofstream log;
    std::ostream* log_out = nullptr;
    if (!log_path.empty()) {
        log = open_out(log_path);
        write_echo_comments(log, cfg.echo());
        log_out = &log;
    }
    const MleResult result = pretrain_mle(env, store, train, &valid, cfg.train, train_rng, log_out);
    if (!result.log.empty())
        std::cout << "pretrain: final train ppl " << result.log.back().train_ppl << ", valid ppl "
                  << result.log.back().valid_ppl << "\n";

    save_checkpoint(out_path, checkpoint_from_store(store, cfg.echo()));
    std::cout << "pretrain: wrote " << out_path << "\n";
    return 0;
}

int cmd_train_agent(const ExperimentConfig& cfg, const std::string& env_path, const std::string& out_path,
                    const std::string& curve_path, bool save_best) {
    LoadedEnv loaded = load_env(cfg, env_path);
    const NmtModel env(loaded.nmt_cfg, loaded.store);
    const Corpus train = load_split(cfg, loaded.vocab_src, loaded.vocab_tgt, "train");
    const Corpus valid = load_split(cfg, loaded.vocab_src, loaded.vocab_tgt, "valid");

    ParamStore agent_store, baseline_store;
    Rng init_rng(derive_seed(cfg.seed, 0xA6E27));
    AgentModel agent(AgentConfig{env.observation_dim(), cfg.agent.hidden_dim}, agent_store, init_rng);
    BaselineModel baseline(BaselineConfig{env.observation_dim(), cfg.agent.baseline_hidden}, baseline_store,
                           init_rng);

    std::ofstream curve;
    std::ostream* curve_out = nullptr;
    if (!curve_path.empty()) {
        curve = open_out(curve_path);
        write_echo_comments(curve, cfg.echo());
        curve_out = &curve;
    }
    const TrainAgentResult result =
        train_agent(env, agent, agent_store, baseline, baseline_store, train, valid, cfg.reward, cfg.train, curve_out);
    if (result.diverged) std::cout << "train-agent: diverged: " << result.diagnostic << "\n";

    Checkpoint ckpt;
    ckpt.config_echo = cfg.echo();
    if (save_best && !result.best_params.empty()) {
        ckpt.arrays = result.best_params;
    } else {
        for (const auto& [name, p] : agent_store.all()) ckpt.arrays.emplace(name, p.value);
        for (const auto& [name, p] : baseline_store.all()) ckpt.arrays.emplace(name, p.value);
    }
    save_checkpoint(out_path, ckpt);
    std::cout << "train-agent: wrote " << out_path << " (best update " << result.best_update << ")\n";
    return result.diverged ? 1 : 0;
}

struct AgentArtifacts {
    ParamStore agent_store;
    ParamStore baseline_store;
    std::unique_ptr<AgentModel> agent;
};

AgentArtifacts load_agent(const ExperimentConfig& cfg, const NmtModel& env, const std::string& path) {
    AgentArtifacts art;
    Rng scratch(0);
    AgentModel::register_params(AgentConfig{env.observation_dim(), cfg.agent.hidden_dim}, art.agent_store, scratch);
    BaselineModel::register_params(BaselineConfig{env.observation_dim(), cfg.agent.baseline_hidden},
                                   art.baseline_store, scratch);
    const Checkpoint ckpt = load_checkpoint(path);
    load_into_store(ckpt, art.agent_store);
    load_into_store(ckpt, art.baseline_store);
    art.agent = std::make_unique<AgentModel>(AgentConfig{env.observation_dim(), cfg.agent.hidden_dim},
                                             art.agent_store);
    return art;
}

std::vector<std::vector<int>> read_id_lines(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read file " + path);
    std::vector<std::vector<int>> out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::vector<int> ids;
        std::string tok;
        while (ss >> tok) ids.push_back(vocab.id(tok));
        ids.push_back(kEos);
        out.push_back(std::move(ids));
    }
    return out;
}

int cmd_decode(const ExperimentConfig& cfg, const std::string& env_path, const std::string& agent_path,
               const std::string& policy_name, const std::string& input_path, const std::string& refs_path,
               int beam_k, const std::string& trace_path, const std::string& metrics_path) {
    LoadedEnv loaded = load_env(cfg, env_path);
    const NmtModel env(loaded.nmt_cfg, loaded.store);
    AgentArtifacts art;
    if (policy_name == "agent") art = load_agent(cfg, env, agent_path);
    auto policy = make_policy(policy_name, art.agent.get());

    const auto sources = read_id_lines(input_path, loaded.vocab_src);
    std::vector<std::vector<int>> refs;
    if (!refs_path.empty()) {
        refs = read_id_lines(refs_path, loaded.vocab_tgt);
        if (refs.size() != sources.size())
            throw std::runtime_error("line-count mismatch between " + input_path + " and " + refs_path);
    }

    std::ofstream trace = open_out(trace_path);
    nlohmann::json header;
    header["record"] = "header";
    header["config"] = cfg.echo();
    trace << header.dump() << "\n";

    std::vector<SentenceMetrics> rows;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const Trajectory traj = beam_k > 1
                                    ? simultaneous_beam_decode(env, *policy, sources[i], beam_k)
                                    : simultaneous_greedy_decode(env, *policy, sources[i]);
        write_trace_jsonl(trace, traj, static_cast<int>(i));
        SentenceMetrics m;
        if (!refs.empty()) {
            m = score_trajectory(static_cast<int>(i), traj, refs[i]);
        } else {
            m.sentence_id = static_cast<int>(i);
            m.bleu = m.bleu0 = std::nan("");
            m.ap = average_proportion(traj);
            m.cw_mean = cw_mean(traj.actions);
            m.cw_max = cw_max(traj.actions);
            m.source_len = traj.source_length;
            m.target_len = traj.writes();
        }
        rows.push_back(m);
    }
    if (!metrics_path.empty()) {
        std::ofstream metrics = open_out(metrics_path);
        write_metrics_csv(metrics, rows, cfg.echo());
    }
    std::cout << "decode: " << sources.size() << " sentences -> " << trace_path << "\n";
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& env_path, const std::string& agent_path,
                 const std::string& policy_name, const std::string& split, const std::string& mode, int beam_k,
                 const std::string& out_path) {
    LoadedEnv loaded = load_env(cfg, env_path);
    const NmtModel env(loaded.nmt_cfg, loaded.store);
    AgentArtifacts art;
    if (policy_name == "agent") art = load_agent(cfg, env, agent_path);
    auto policy = make_policy(policy_name, art.agent.get());

    const Corpus corpus = load_split(cfg, loaded.vocab_src, loaded.vocab_tgt, split);
    const EvalMode eval_mode = mode == "beam" ? EvalMode::beam_k(beam_k) : EvalMode::greedy();
    const EvalResult result = evaluate_corpus(env, *policy, corpus, eval_mode);

    if (!out_path.empty()) {
        std::ofstream out = open_out(out_path);
        write_metrics_csv(out, result.rows, cfg.echo());
    }
    std::cout << "evaluate: policy " << policy_name << " split " << split << " mode " << mode << " sentences "
              << result.aggregates.sentences << " bleu " << result.aggregates.mean_bleu << " ap "
              << result.aggregates.mean_ap << " cw " << result.aggregates.mean_cw << "\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& env_path, const std::string& out_path,
              const std::string& svg_path) {
    LoadedEnv loaded = load_env(cfg, env_path);
    const NmtModel env(loaded.nmt_cfg, loaded.store);
    const Corpus train = load_split(cfg, loaded.vocab_src, loaded.vocab_tgt, "train");
    const Corpus valid = load_split(cfg, loaded.vocab_src, loaded.vocab_tgt, "valid");
    const Corpus test = load_split(cfg, loaded.vocab_src, loaded.vocab_tgt, "test");

    const SweepResult result = sweep(env, loaded.store, train, valid, test, cfg.sweep_config(), &std::cout);
    for (const auto& diag : result.diagnostics) std::cout << "sweep: " << diag << "\n";

    std::ofstream out = open_out(out_path);
    write_sweep_csv(out, result.rows, cfg.echo());
    if (!svg_path.empty()) {
        std::ofstream svg = open_out(svg_path);
        export_curve_svg(svg, result.rows);
    }
    std::cout << "sweep: wrote " << out_path << "\n";
    return 0;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read curve file " + path);
    std::vector<SweepRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 11) throw std::runtime_error("malformed curve row in " + path);
        SweepRow r;
        r.target_kind = fields[0];
        r.target_value = std::stod(fields[1]);
        r.mode = fields[2];
        r.bleu = std::stod(fields[3]);
        r.bleu0 = std::stod(fields[4]);
        r.ap = std::stod(fields[5]);
        r.cw = std::stod(fields[6]);
        r.alpha = std::stod(fields[7]);
        r.beta = std::stod(fields[8]);
        r.best_update = std::stoi(fields[9]);
        r.diverged = fields[10] == "1";
        rows.push_back(r);
    }
    return rows;
}

int cmd_export_plots(const ExperimentConfig& cfg, const std::string& env_path, const std::string& agent_path,
                     const std::string& policy_name, const std::string& input_path, const std::string& out_dir,
                     int limit, const std::string& curve_path) {
    std::filesystem::create_directories(out_dir);
    if (!curve_path.empty()) {
        const auto rows = parse_sweep_csv(curve_path);
        std::ofstream svg = open_out(out_dir + "/quality_vs_delay.svg");
        export_curve_svg(svg, rows);
        std::cout << "export-plots: wrote " << out_dir << "/quality_vs_delay.svg\n";
    }
    if (input_path.empty()) return 0;

    LoadedEnv loaded = load_env(cfg, env_path);
    const NmtModel env(loaded.nmt_cfg, loaded.store);
    AgentArtifacts art;
    if (policy_name == "agent") art = load_agent(cfg, env, agent_path);
    auto policy = make_policy(policy_name, art.agent.get());

    const auto sources = read_id_lines(input_path, loaded.vocab_src);
    const int n = std::min<int>(limit, static_cast<int>(sources.size()));
    for (int i = 0; i < n; ++i) {
        const Trajectory traj = simultaneous_greedy_decode(env, *policy, sources[static_cast<std::size_t>(i)]);
        std::vector<std::string> src_tokens, tgt_tokens;
        for (int id : sources[static_cast<std::size_t>(i)]) src_tokens.push_back(loaded.vocab_src.token(id));
        for (int id : traj.emitted) tgt_tokens.push_back(loaded.vocab_tgt.token(id));
        std::ofstream csv = open_out(out_dir + "/heatmap_" + std::to_string(i) + ".csv");
        export_heatmap_csv(csv, traj, src_tokens, tgt_tokens);
        std::ofstream svg = open_out(out_dir + "/heatmap_" + std::to_string(i) + ".svg");
        export_heatmap_svg(svg, traj, src_tokens, tgt_tokens);
    }
    std::cout << "export-plots: wrote " << n << " heat-maps to " << out_dir << "\n";
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"simultaneous translation workbench"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic parallel corpus");
    add_common(gen, gen_opts);

    CommonOpts pre_opts;
    std::string pre_out, pre_log;
    CLI::App* pre = app.add_subcommand("pretrain", "maximum-likelihood pre-training of the environment");
    add_common(pre, pre_opts);
    pre->add_option("--out", pre_out, "environment checkpoint to write")->required();
    pre->add_option("--log", pre_log, "per-epoch perplexity CSV");

    CommonOpts ta_opts;
    std::string ta_env, ta_out, ta_curve;
    bool ta_best = false;
    CLI::App* ta = app.add_subcommand("train-agent", "policy-gradient training of the READ/WRITE agent");
    add_common(ta, ta_opts);
    ta->add_option("--env", ta_env, "pre-trained environment checkpoint")->required();
    ta->add_option("--out", ta_out, "agent checkpoint to write")->required();
    ta->add_option("--curve", ta_curve, "learning-curve CSV");
    ta->add_flag("--save-best", ta_best, "save the best validation BLEU/AP snapshot instead of the final state");

    CommonOpts de_opts;
    std::string de_env, de_agent, de_policy = "agent", de_input, de_refs, de_trace = "trace.jsonl", de_metrics;
    int de_beam = 1;
    CLI::App* de = app.add_subcommand("decode", "simultaneous decoding of raw text");
    add_common(de, de_opts);
    de->add_option("--env", de_env, "environment checkpoint")->required();
    de->add_option("--agent", de_agent, "agent checkpoint (policy 'agent')");
    de->add_option("--policy", de_policy, "agent|wue|wos|wiw|wid");
    de->add_option("--input", de_input, "source text, one sentence per line")->required();
    de->add_option("--refs", de_refs, "reference text for quality metrics");
    de->add_option("--beam-k", de_beam, "beam width (1 = greedy)");
    de->add_option("--trace", de_trace, "step trace JSONL to write");
    de->add_option("--metrics", de_metrics, "per-sentence metrics CSV to write");

    CommonOpts ev_opts;
    std::string ev_env, ev_agent, ev_policy = "agent", ev_split = "test", ev_mode = "greedy", ev_out;
    int ev_beam = 5;
    CLI::App* ev = app.add_subcommand("evaluate", "score a corpus split");
    add_common(ev, ev_opts);
    ev->add_option("--env", ev_env, "environment checkpoint")->required();
    ev->add_option("--agent", ev_agent, "agent checkpoint (policy 'agent')");
    ev->add_option("--policy", ev_policy, "agent|wue|wos|wiw|wid");
    ev->add_option("--split", ev_split, "train|valid|test");
    ev->add_option("--mode", ev_mode, "greedy|beam");
    ev->add_option("--beam-k", ev_beam, "beam width for mode=beam");
    ev->add_option("--out", ev_out, "per-sentence metrics CSV to write");

    CommonOpts sw_opts;
    std::string sw_env, sw_out = "curve.csv", sw_svg;
    CLI::App* sw = app.add_subcommand("sweep", "train one agent per delay target and export the quality-delay curve");
    add_common(sw, sw_opts);
    sw->add_option("--env", sw_env, "environment checkpoint")->required();
    sw->add_option("--out", sw_out, "curve CSV to write");
    sw->add_option("--svg", sw_svg, "quality-vs-delay SVG to write");

    CommonOpts xp_opts;
    std::string xp_env, xp_agent, xp_policy = "agent", xp_input, xp_dir = "plots", xp_curve;
    int xp_limit = 4;
    CLI::App* xp = app.add_subcommand("export-plots", "alignment heat-maps and curve figures");
    add_common(xp, xp_opts);
    xp->add_option("--env", xp_env, "environment checkpoint (for heat-maps)");
    xp->add_option("--agent", xp_agent, "agent checkpoint (policy 'agent')");
    xp->add_option("--policy", xp_policy, "agent|wue|wos|wiw|wid");
    xp->add_option("--input", xp_input, "source text for heat-maps");
    xp->add_option("--out-dir", xp_dir, "output directory");
    xp->add_option("--limit", xp_limit, "max sentences to render");
    xp->add_option("--curve", xp_curve, "sweep curve CSV to render as SVG");

    std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 consumes a reversed vector
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(load_config(gen_opts));
        if (pre->parsed()) return cmd_pretrain(load_config(pre_opts), pre_out, pre_log);
        if (ta->parsed()) return cmd_train_agent(load_config(ta_opts), ta_env, ta_out, ta_curve, ta_best);
        if (de->parsed())
            return cmd_decode(load_config(de_opts), de_env, de_agent, de_policy, de_input, de_refs, de_beam, de_trace,
                              de_metrics);
        if (ev->parsed())
            return cmd_evaluate(load_config(ev_opts), ev_env, ev_agent, ev_policy, ev_split, ev_mode, ev_beam, ev_out);
        if (sw->parsed()) return cmd_sweep(load_config(sw_opts), sw_env, sw_out, sw_svg);
        if (xp->parsed())
            return cmd_export_plots(load_config(xp_opts), xp_env, xp_agent, xp_policy, xp_input, xp_dir, xp_limit,
                                    xp_curve);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace simulmt
