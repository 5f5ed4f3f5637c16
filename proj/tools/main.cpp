#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "senla/checkpoint.hpp"
#include "senla/trainer.hpp"
#include "senla/zeroshot.hpp"

namespace fs = std::filesystem;
using namespace senla;

namespace {

// Exit codes: 0 ok, 1 unexpected, 2 usage/config, 3 file, 4 compatibility,
// 5 numeric failure.
constexpr int kExitUsage = 2;
constexpr int kExitFile = 3;
constexpr int kExitCompat = 4;
constexpr int kExitNumeric = 5;

void write_text(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw FileError("cannot open '" + path + "' for writing");
    os << content;
}

struct DataOpts {
    GeneratorConfig gen;
    std::string out;
};

void add_gen_flags(CLI::App* cmd, GeneratorConfig& g) {
    cmd->add_option("--seed", g.seed, "dataset seed")->capture_default_str();
    cmd->add_option("--samples-per-class", g.samples_per_class, "samples per activity class")
        ->capture_default_str();
    cmd->add_option("--subjects", g.subjects, "number of synthetic subjects")->capture_default_str();
    cmd->add_option("--environments", g.environments, "number of capture environments")
        ->capture_default_str();
    cmd->add_option("--frames", g.frames, "frames per clip")->capture_default_str();
    cmd->add_option("--video-hw", g.video_hw, "video grid extent")->capture_default_str();
    cmd->add_option("--lidar-mean-points", g.lidar_mean_points, "mean lidar points per frame")
        ->capture_default_str();
    cmd->add_option("--radar-mean-points", g.radar_mean_points, "mean radar points per frame")
        ->capture_default_str();
    cmd->add_option("--env-noise", g.env_noise, "per-environment noise levels")->capture_default_str();
    cmd->add_option("--env-clutter", g.env_clutter, "per-environment clutter rates")
        ->capture_default_str();
}

struct ModelOpts {
    ModelConfig cfg;
};

void add_model_flags(CLI::App* cmd, ModelConfig& m) {
    cmd->add_option("--width", m.width, "transformer width")->capture_default_str();
    cmd->add_option("--heads", m.heads, "attention heads")->capture_default_str();
    cmd->add_option("--video-blocks", m.video_blocks, "video encoder blocks")->capture_default_str();
    cmd->add_option("--point-blocks", m.point_blocks, "point encoder blocks")->capture_default_str();
    cmd->add_option("--text-blocks", m.text_blocks, "text backbone blocks")->capture_default_str();
    cmd->add_option("--mlp-ratio", m.mlp_ratio, "mlp hidden ratio")->capture_default_str();
    cmd->add_option("--embed-dim", m.embed_dim, "shared embedding width")->capture_default_str();
    cmd->add_option("--knn-k", m.knn_k, "point neighborhood size")->capture_default_str();
    cmd->add_option("--prompts", m.prompt_count, "learnable prompt half-count n")->capture_default_str();
    cmd->add_option("--max-text-len", m.max_text_len, "token budget per class text")
        ->capture_default_str();
    cmd->add_option("--mode", m.mode, "contrastive | onehot")->capture_default_str();
    cmd->add_option("--modality", m.modality, "all | video | lidar | radar")->capture_default_str();
    cmd->add_option("--zero-shot-text", m.zero_shot_text, "name_desc | name_name")
        ->capture_default_str();
    cmd->add_flag("--description,!--no-description", m.use_description, "use class descriptions")
        ->capture_default_str();
    cmd->add_flag("--soft-prompt,!--no-soft-prompt", m.soft_prompt, "use learnable prompts")
        ->capture_default_str();
}

void add_loss_flags(CLI::App* cmd, LossConfig& l) {
    cmd->add_option("--tau", l.tau, "softmax temperature")->capture_default_str();
    cmd->add_option("--alpha", l.alpha, "video loss weight")->capture_default_str();
    cmd->add_option("--beta", l.beta, "lidar loss weight")->capture_default_str();
    cmd->add_option("--gamma", l.gamma, "radar loss weight")->capture_default_str();
    cmd->add_flag("--normalize,!--no-normalize", l.normalize, "cosine similarity")
        ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, TrainConfig& t) {
    cmd->add_option("--batch-size", t.batch_size, "batch size")->capture_default_str();
    cmd->add_option("--lr", t.lr, "learning rate")->capture_default_str();
    cmd->add_option("--momentum", t.momentum, "sgdm momentum")->capture_default_str();
    cmd->add_option("--weight-decay", t.weight_decay, "weight decay")->capture_default_str();
    cmd->add_option("--epochs", t.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--lr-steps", t.lr_steps, "epochs with lr reductions")->capture_default_str();
    cmd->add_option("--lr-decay", t.lr_decay, "lr reduction factor")->capture_default_str();
    cmd->add_option("--train-seed", t.seed, "training seed")->capture_default_str();
    cmd->add_flag("--joint,!--no-joint", t.joint, "train all modalities jointly")
        ->capture_default_str();
    cmd->add_option("--split", t.split, "random | cross_subject | cross_environment")
        ->capture_default_str();
}

void run_one_training(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                      const LossConfig& lcfg, const std::string& out_dir, const std::string& tag) {
    const auto split = build_splits(data, split_from_name(tcfg.split), tcfg.seed);
    Model model(mcfg, data.registry, Vocabulary::build(data.registry), tcfg.seed);
    Trainer trainer(model, data, split.train, tcfg, lcfg);

    const std::string suffix = tag.empty() ? "" : "." + tag;
    std::ofstream log_txt(out_dir + "/train_log" + suffix + ".txt");
    std::ofstream log_tsv(out_dir + "/train_log" + suffix + ".tsv");
    const auto mods = model.modalities();
    log_txt << epoch_header(mods) << "\n";
    log_tsv << epoch_header(mods) << "\n";
    auto stats = trainer.run([&](const EpochStats& s) {
        const std::string line = format_epoch_line(s, mods);
        log_txt << line << "\n";
        log_txt.flush();
        log_tsv << line << "\n";
        log_tsv.flush();
        std::cout << line << "\n";
    });

    CheckpointExtra extra;
    extra.loss = lcfg;
    extra.train = tcfg;
    extra.epoch = tcfg.epochs;
    extra.rng_state = trainer.shuffle_rng().state();
    for (const auto& slot : trainer.optimizer().slots()) extra.momentum.emplace_back(slot.name, slot.buffer);
    save_checkpoint(model, extra, out_dir + "/checkpoint" + suffix + ".bin");
}

int dispatch(int argc, char** argv) {
    CLI::App app{"sensor-language alignment for zero-shot activity recognition"};
    app.require_subcommand(1);

    // --- gen-data ---
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic multimodal dataset");
    GeneratorConfig gcfg;
    std::string gen_out;
    add_gen_flags(gen, gcfg);
    gen->add_option("--out", gen_out, "dataset output path")->required();
    gen->set_config("--config", "", "read options from a key=value file");
    gen->allow_config_extras(false);

    // --- train ---
    auto* train = app.add_subcommand("train", "train encoders on a dataset");
    std::string train_data, train_out;
    ModelConfig mcfg;
    TrainConfig tcfg;
    LossConfig lcfg;
    train->add_option("--data", train_data, "dataset file")->required();
    train->add_option("--out-dir", train_out, "run output directory")->required();
    add_model_flags(train, mcfg);
    add_train_flags(train, tcfg);
    add_loss_flags(train, lcfg);
    train->set_config("--config", "", "read options from a key=value file");
    train->allow_config_extras(false);

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_ckpt, eval_data, eval_out = ".", eval_split, eval_labels = "full",
                eval_modality = "all";
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "dataset file")->required();
    eval_cmd->add_option("--out-dir", eval_out, "report output directory")->capture_default_str();
    eval_cmd->add_option("--split", eval_split, "split strategy (default: the checkpoint's)");
    eval_cmd->add_option("--labels", eval_labels, "full | seen")->capture_default_str();
    eval_cmd->add_option("--modality", eval_modality, "all | video | lidar | radar")
        ->capture_default_str();
    eval_cmd->set_config("--config", "", "read options from a key=value file");
    eval_cmd->allow_config_extras(false);

    // --- infer ---
    auto* infer = app.add_subcommand("infer", "predict one sample");
    std::string inf_ckpt, inf_data, inf_modality = "lidar", inf_labels = "full";
    int inf_index = 0;
    infer->add_option("--checkpoint", inf_ckpt, "checkpoint file")->required();
    infer->add_option("--data", inf_data, "dataset file")->required();
    infer->add_option("--index", inf_index, "sample index")->capture_default_str();
    infer->add_option("--modality", inf_modality, "video | lidar | radar")->capture_default_str();
    infer->add_option("--labels", inf_labels, "full | seen")->capture_default_str();
    infer->set_config("--config", "", "read options from a key=value file");
    infer->allow_config_extras(false);

    // --- dump-embeddings ---
    auto* dump = app.add_subcommand("dump-embeddings", "write sample and class-text embeddings");
    std::string dump_ckpt, dump_data, dump_out, dump_split, dump_subset = "test";
    dump->add_option("--checkpoint", dump_ckpt, "checkpoint file")->required();
    dump->add_option("--data", dump_data, "dataset file")->required();
    dump->add_option("--out", dump_out, "output table path")->required();
    dump->add_option("--split", dump_split, "split strategy (default: the checkpoint's)");
    dump->add_option("--subset", dump_subset, "train | test | all")->capture_default_str();
    dump->set_config("--config", "", "read options from a key=value file");
    dump->allow_config_extras(false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (gen->parsed()) {
        gcfg.validate();
        Dataset ds = generate_dataset(gcfg);
        write_dataset(ds, gen_out);
        write_text(gen_out + ".registry.tsv", ds.registry.serialize());
        write_text(gen_out + ".vocab.txt", Vocabulary::build(ds.registry).serialize());
        write_text(gen_out + ".cfg", gen->config_to_str(true, false));
        std::printf("wrote %zu samples (%d classes: %d seen, %d unseen) to %s\n", ds.samples.size(),
                    ds.registry.total(), ds.registry.seen_count(), ds.registry.unseen_count(),
                    gen_out.c_str());
        for (const auto& e : ds.registry.entries())
            std::printf("  [%2d] %-7s %s\n", e.class_id, e.seen ? "seen" : "unseen", e.name.c_str());
        return 0;
    }

    if (train->parsed()) {
        mcfg.validate();
        tcfg.validate();
        lcfg.validate();
        Dataset data = read_dataset(train_data);
        mcfg.frames = data.cfg.frames;
        mcfg.video_hw = data.cfg.video_hw;
        fs::create_directories(train_out);
        write_text(train_out + "/config_resolved.cfg", train->config_to_str(true, false));
        if (tcfg.joint && mcfg.modality == "all") {
            run_one_training(data, mcfg, tcfg, lcfg, train_out, "");
        } else if (mcfg.modality != "all") {
            run_one_training(data, mcfg, tcfg, lcfg, train_out, mcfg.modality);
        } else {
            // separate training: one independent model per modality
            for (const char* m : {"video", "lidar", "radar"}) {
                ModelConfig mm = mcfg;
                mm.modality = m;
                run_one_training(data, mm, tcfg, lcfg, train_out, m);
            }
        }
        return 0;
    }

    if (eval_cmd->parsed()) {
        auto loaded = load_checkpoint(eval_ckpt);
        Dataset data = read_dataset(eval_data);
        if (loaded.model->registry.hash() != data.registry.hash())
            throw CompatibilityError("checkpoint and dataset class registries differ");
        const std::string split_name_str = eval_split.empty() ? loaded.extra.train.split : eval_split;
        const auto split = build_splits(data, split_from_name(split_name_str), loaded.extra.train.seed);
        const LabelSpace space = eval_labels == "seen" ? LabelSpace::SeenOnly : LabelSpace::Full;
        fs::create_directories(eval_out);
        write_text(eval_out + "/eval_config_resolved.cfg", eval_cmd->config_to_str(true, false));
        std::vector<Modality> mods;
        if (eval_modality == "all")
            mods = loaded.model->modalities();
        else
            mods.push_back(modality_from_name(eval_modality));
        for (Modality m : mods) {
            auto rep = evaluate(*loaded.model, data, split.test, m, space, loaded.extra.loss,
                                split_name_str);
            const std::string base =
                eval_out + "/eval_" + modality_name(m) + "_" + split_name_str;
            write_text(base + ".txt", rep.render_table(loaded.model->registry));
            write_text(base + ".json", rep.to_json(loaded.model->registry));
            std::cout << rep.render_table(loaded.model->registry) << "\n";
        }
        return 0;
    }

    if (infer->parsed()) {
        auto loaded = load_checkpoint(inf_ckpt);
        Dataset data = read_dataset(inf_data);
        if (loaded.model->registry.hash() != data.registry.hash())
            throw CompatibilityError("checkpoint and dataset class registries differ");
        if (inf_index < 0 || inf_index >= static_cast<int>(data.samples.size()))
            throw ConfigError("sample index out of range");
        const LabelSpace space = inf_labels == "seen" ? LabelSpace::SeenOnly : LabelSpace::Full;
        auto scorer = make_class_scorer(*loaded.model, space, loaded.extra.loss);
        const auto& sample = data.samples[static_cast<size_t>(inf_index)];
        auto pred = predict(*loaded.model, scorer, sample, modality_from_name(inf_modality));
        std::printf("sample %d (true class: %s)\n", inf_index,
                    data.registry.entry(sample.class_id).name.c_str());
        for (size_t k = 0; k < pred.ranking.size() && k < 5; ++k)
            std::printf("  %zu. %-28s %.6f\n", k + 1,
                        data.registry.entry(pred.ranking[k].first).name.c_str(),
                        static_cast<double>(pred.ranking[k].second));
        return 0;
    }

    if (dump->parsed()) {
        auto loaded = load_checkpoint(dump_ckpt);
        Dataset data = read_dataset(dump_data);
        if (loaded.model->registry.hash() != data.registry.hash())
            throw CompatibilityError("checkpoint and dataset class registries differ");
        const std::string split_name_str = dump_split.empty() ? loaded.extra.train.split : dump_split;
        const auto split = build_splits(data, split_from_name(split_name_str), loaded.extra.train.seed);
        std::vector<int> indices;
        if (dump_subset == "train") {
            indices = split.train;
        } else if (dump_subset == "test") {
            indices = split.test;
        } else if (dump_subset == "all") {
            indices.resize(data.samples.size());
            for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
        } else {
            throw ConfigError("subset must be train, test or all");
        }
        dump_embeddings(*loaded.model, data, indices, loaded.extra.loss, dump_out);
        write_text(dump_out + ".cfg", dump->config_to_str(true, false));
        std::printf("wrote embeddings for %zu samples to %s\n", indices.size(), dump_out.c_str());
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FileError& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return kExitFile;
    } catch (const CompatibilityError& e) {
        std::cerr << "compatibility error: " << e.what() << "\n";
        return kExitCompat;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DegenerateInputError& e) {
        std::cerr << "degenerate input: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
