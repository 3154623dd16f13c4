// ravu: command-line front end for building video memories and asking
// questions against them.

#include <iostream>

#include <CLI11.hpp>

#include "ravu/config.hpp"
#include "ravu/errors.hpp"
#include "ravu/graph_builder.hpp"
#include "ravu/harness.hpp"

namespace fs = std::filesystem;
using namespace ravu;

namespace {

struct Env {
    Config config;
    std::unique_ptr<Backend> backend;
    PromptLibrary prompts;
    ExampleLibrary examples;
};

Env make_env(const std::string& config_path) {
    Env env;
    env.config = load_config(config_path.empty() ? std::nullopt
                                                 : std::optional<fs::path>(config_path));
    if (env.config.assets_dir.empty()) env.config.assets_dir = RAVU_DEFAULT_ASSET_DIR;
    env.backend = make_backend(env.config);
    env.prompts = PromptLibrary::load(env.config.assets_dir / "prompts");
    env.examples = load_example_library(env.config.assets_dir / "breakdown_examples");
    return env;
}

BuildOptions build_options(const Config& c) {
    return {c.max_retries, c.context_frames, c.workers};
}

// <dir>/associated.json holds the frames and associated nodes.
void run_ingest(const Env& env, const fs::path& observations, const fs::path& tracklets,
                const fs::path& out) {
    const auto assoc = associate(parse_observations(read_file(observations)),
                                 parse_tracklets(read_file(tracklets)), env.config.min_iou,
                                 env.config.fps);
    SpatioTemporalGraph g;
    g.fps = env.config.fps;
    g.frames = assoc.frames;
    g.nodes = assoc.nodes;
    fs::create_directories(out);
    write_file(out / "associated.json", serialize(g));
    std::cout << "ingested " << g.frames.size() << " frames, " << g.nodes.size() << " nodes\n";
}

void run_build(Env& env, const fs::path& dir) {
    const auto associated = deserialize(read_file(dir / "associated.json"));
    AssociationResult assoc;
    assoc.frames = associated.frames;
    assoc.nodes = associated.nodes;
    BuildStats stats;
    const auto g = build_graph(assoc, associated.fps, *env.backend, env.prompts,
                               build_options(env.config), &stats);
    write_file(dir / "graph.json", serialize(g));
    write_file(dir / "edges.jsonl", edges_to_jsonl(g));
    write_file(dir / "descriptions.jsonl", descriptions_to_jsonl(g));
    std::cout << "built " << stats.nodes << " nodes, " << stats.edges << " edges ("
              << stats.dropped_edge_lines << " relation lines dropped)\n";
}

void run_events(Env& env, const fs::path& dir) {
    auto g = deserialize(read_file(dir / "graph.json"));
    BuildStats stats;
    add_events(g, *env.backend, env.prompts, build_options(env.config), &stats);
    write_file(dir / "graph.json", serialize(g));
    std::cout << "segmented " << stats.events << " events (" << stats.event_fallbacks
              << " fallbacks)\n";
}

void run_embed(Env& env, const fs::path& dir) {
    const auto g = deserialize(read_file(dir / "graph.json"));
    const auto records = embed_graph(g, *env.backend, env.config.workers);
    write_embeddings(dir, records);
    std::cout << "embedded " << records.size() << " node descriptions\n";
}

void run_full(Env& env, const fs::path& dir) {
    run_ingest(env, dir / "observations.jsonl", dir / "tracklets.json", dir);
    run_build(env, dir);
    run_events(env, dir);
    run_embed(env, dir);
}

std::vector<fs::path> video_dirs(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

MemoryStore load_store(const fs::path& videos, const std::vector<std::string>& ids) {
    MemoryStore store;
    for (const auto& id : ids) {
        if (store.contains(id)) continue;
        try {
            store.emplace(id, load_memory(videos / id));
        } catch (const NotFound&) {
            // reported per item as errored
        }
    }
    return store;
}

void write_report(const std::string& out, const std::string& csv, const nlohmann::json& j) {
    std::cout << csv;
    if (out.empty()) return;
    write_file(out + ".csv", csv);
    write_file(out + ".json", j.dump(1) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Video memory graph and question answering"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (default: $RAVU_CONFIG)");

    std::string observations, tracklets, out_dir;
    auto* ingest = app.add_subcommand("ingest", "associate observations with tracklets");
    ingest->add_option("--observations", observations)->required();
    ingest->add_option("--tracklets", tracklets)->required();
    ingest->add_option("--out", out_dir)->required();

    std::string video_dir;
    bool full = false;
    auto* build = app.add_subcommand("build", "relations and node descriptions");
    build->add_option("--video", video_dir, "directory with associated.json")->required();
    build->add_flag("--full", full,
                    "run ingest, build, events and embed from observations.jsonl/tracklets.json");

    auto* embed = app.add_subcommand("embed", "embed node descriptions");
    embed->add_option("--video", video_dir)->required();
    auto* events = app.add_subcommand("events", "segment entity events");
    events->add_option("--video", video_dir)->required();

    std::string corpus_dir;
    auto* build_all = app.add_subcommand("build-corpus", "full build for every corpus video");
    build_all->add_option("--corpus", corpus_dir)->required();

    std::string question, mode = "auto";
    std::vector<std::string> options;
    std::optional<std::size_t> budget;
    auto* ask = app.add_subcommand("ask", "answer one question");
    ask->add_option("--video", video_dir)->required();
    ask->add_option("--question", question)->required();
    ask->add_option("--options", options, "answer options");
    ask->add_option("--budget", budget, "maximum frames retrieved");
    ask->add_option("--mode", mode, "auto, plan or global")->check(CLI::IsMember({"auto", "plan", "global"}));

    auto* eval = app.add_subcommand("eval", "evaluate on a dataset");
    eval->require_subcommand(1);
    std::string dataset, videos, report_out, method = "rerank", report_mode = "non-blocked";
    auto* eval_qa_cmd = eval->add_subcommand("qa", "multiple-choice accuracy");
    auto* eval_loc_cmd = eval->add_subcommand("loc", "frame localization accuracy");
    for (auto* c : {eval_qa_cmd, eval_loc_cmd}) {
        c->add_option("--dataset", dataset)->required();
        c->add_option("--videos", videos, "directory of built videos")->required();
        c->add_option("--out", report_out, "write <out>.csv and <out>.json");
    }
    eval_qa_cmd->add_option("--mode", report_mode, "non-blocked or overall")
        ->check(CLI::IsMember({"non-blocked", "overall"}));
    eval_qa_cmd->add_option("--budget", budget);
    eval_loc_cmd->add_option("--method", method, "rerank, text_embedding or raw_vector")
        ->check(CLI::IsMember({"rerank", "text_embedding", "raw_vector"}));

    SynthParams synth_params;
    std::size_t n_videos = 50;
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("--seed", synth_params.seed);
    synth->add_option("--videos", n_videos);
    synth->add_option("--frames", synth_params.n_frames);
    synth->add_option("--entities", synth_params.n_entities);
    synth->add_option("--questions", synth_params.n_questions);
    synth->add_option("--out", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const auto corpus = synth_corpus(synth_params.seed, n_videos, synth_params);
            write_corpus(out_dir, corpus);
            std::cout << "wrote " << corpus.videos.size() << " videos, " << corpus.questions.size()
                      << " questions, " << corpus.localization.size()
                      << " localization items\n";
            return 0;
        }
        auto env = make_env(config_path);
        if (*ingest) {
            run_ingest(env, observations, tracklets, out_dir);
        } else if (*build) {
            full ? run_full(env, video_dir) : run_build(env, video_dir);
        } else if (*embed) {
            run_embed(env, video_dir);
        } else if (*events) {
            run_events(env, video_dir);
        } else if (*build_all) {
            for (const auto& dir : video_dirs(fs::path(corpus_dir) / "videos")) run_full(env, dir);
        } else if (*ask) {
            const auto memory = load_memory(video_dir);
            AskOptions opts{answer_mode_from_string(mode), env.config.budget,
                            env.config.global_budget, env.config.rerank_k,
                            env.config.per_event_candidates, env.config.max_retries};
            if (budget) opts.budget = opts.global_budget = *budget;
            const auto a = answer_question(memory, question, options, std::nullopt, *env.backend,
                                           env.prompts, env.examples, opts);
            nlohmann::json j = {{"frames", a.frames},
                                {"plan", render_plan(a.plan)},
                                {"hierarchical", a.hierarchical},
                                {"notes", a.notes}};
            j["choice"] = options.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.choice);
            std::cout << j.dump(1) << "\n";
        } else if (*eval_qa_cmd) {
            const auto items = parse_mcq(read_file(dataset));
            std::vector<std::string> ids;
            for (const auto& i : items) ids.push_back(i.video_id);
            const auto store = load_store(videos, ids);
            AskOptions opts{AnswerMode::automatic, env.config.budget, env.config.global_budget,
                            env.config.rerank_k, env.config.per_event_candidates,
                            env.config.max_retries};
            if (budget) opts.budget = opts.global_budget = *budget;
            const auto report = eval_qa(items, store, *env.backend, env.prompts, env.examples, opts,
                                        env.config.workers);
            const auto rm = report_mode_from_string(report_mode);
            write_report(report_out, qa_report_csv(report, rm), qa_report_json(report, rm));
        } else if (*eval_loc_cmd) {
            const auto items = parse_localization(read_file(dataset));
            std::vector<std::string> ids;
            for (const auto& i : items) ids.push_back(i.video_id);
            const auto store = load_store(videos, ids);
            const auto report = eval_localization(items, store, *env.backend, env.prompts,
                                                  loc_method_from_string(method),
                                                  env.config.rerank_k, env.config.max_retries);
            write_report(report_out, loc_report_csv(report), loc_report_json(report));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
