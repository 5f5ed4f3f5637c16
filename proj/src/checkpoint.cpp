#include "senla/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <unordered_set>

namespace senla {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'N', 'L', 'A', 'C', 'K', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FileError(std::string("truncated payload: ") + what);
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is, const char* what) {
    const auto n = get<uint64_t>(is, what);
    if (n > (1ull << 32)) throw FileError(std::string("corrupt header: absurd string length in ") + what);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw FileError(std::string("truncated payload: ") + what);
    return s;
}

void put_floats(std::ostream& os, const std::vector<float>& v) {
    put<uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::vector<float> get_floats(std::istream& is, const char* what) {
    const auto n = get<uint64_t>(is, what);
    if (n > (1ull << 32)) throw FileError(std::string("corrupt header: absurd tensor length in ") + what);
    std::vector<float> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!is) throw FileError(std::string("truncated payload: ") + what);
    return v;
}

void put_int_list(std::ostream& os, const std::vector<int>& v) {
    put<uint32_t>(os, static_cast<uint32_t>(v.size()));
    for (int x : v) put<int32_t>(os, x);
}

std::vector<int> get_int_list(std::istream& is, const char* what) {
    const auto n = get<uint32_t>(is, what);
    std::vector<int> v(n);
    for (auto& x : v) x = get<int32_t>(is, what);
    return v;
}

void put_model_config(std::ostream& os, const ModelConfig& c) {
    put<int32_t>(os, c.width);
    put<int32_t>(os, c.heads);
    put<int32_t>(os, c.video_blocks);
    put<int32_t>(os, c.point_blocks);
    put<int32_t>(os, c.text_blocks);
    put<int32_t>(os, c.mlp_ratio);
    put<int32_t>(os, c.embed_dim);
    put<int32_t>(os, c.frames);
    put<int32_t>(os, c.video_hw);
    put<int32_t>(os, c.patch_size);
    put<int32_t>(os, c.knn_k);
    put<int32_t>(os, c.prompt_count);
    put<int32_t>(os, c.max_text_len);
    put<int32_t>(os, c.lidar_feats);
    put<int32_t>(os, c.radar_feats);
    put_string(os, c.mode);
    put_string(os, c.modality);
    put<uint8_t>(os, c.use_description ? 1 : 0);
    put<uint8_t>(os, c.soft_prompt ? 1 : 0);
    put_string(os, c.zero_shot_text);
}

ModelConfig get_model_config(std::istream& is) {
    ModelConfig c;
    c.width = get<int32_t>(is, "model config");
    c.heads = get<int32_t>(is, "model config");
    c.video_blocks = get<int32_t>(is, "model config");
    c.point_blocks = get<int32_t>(is, "model config");
    c.text_blocks = get<int32_t>(is, "model config");
    c.mlp_ratio = get<int32_t>(is, "model config");
    c.embed_dim = get<int32_t>(is, "model config");
    c.frames = get<int32_t>(is, "model config");
    c.video_hw = get<int32_t>(is, "model config");
    c.patch_size = get<int32_t>(is, "model config");
    c.knn_k = get<int32_t>(is, "model config");
    c.prompt_count = get<int32_t>(is, "model config");
    c.max_text_len = get<int32_t>(is, "model config");
    c.lidar_feats = get<int32_t>(is, "model config");
    c.radar_feats = get<int32_t>(is, "model config");
    c.mode = get_string(is, "model config");
    c.modality = get_string(is, "model config");
    c.use_description = get<uint8_t>(is, "model config") != 0;
    c.soft_prompt = get<uint8_t>(is, "model config") != 0;
    c.zero_shot_text = get_string(is, "model config");
    return c;
}

}  // namespace

void save_checkpoint(const Model& model, const CheckpointExtra& extra, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FileError("cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    put<uint32_t>(os, kVersion);
    put_model_config(os, model.cfg);
    put<uint64_t>(os, model.seed);
    put_string(os, model.vocab.serialize());
    put_string(os, model.registry.serialize());

    put<float>(os, extra.loss.tau);
    put<float>(os, extra.loss.alpha);
    put<float>(os, extra.loss.beta);
    put<float>(os, extra.loss.gamma);
    put<uint8_t>(os, extra.loss.normalize ? 1 : 0);

    put<int32_t>(os, extra.train.batch_size);
    put<float>(os, extra.train.lr);
    put<float>(os, extra.train.momentum);
    put<float>(os, extra.train.weight_decay);
    put<int32_t>(os, extra.train.epochs);
    put_int_list(os, extra.train.lr_steps);
    put<float>(os, extra.train.lr_decay);
    put<uint64_t>(os, extra.train.seed);
    put<uint8_t>(os, extra.train.joint ? 1 : 0);
    put_string(os, extra.train.split);

    put<int32_t>(os, extra.epoch);
    for (uint64_t w : extra.rng_state) put<uint64_t>(os, w);

    put<uint32_t>(os, static_cast<uint32_t>(model.params.entries().size()));
    for (const auto& e : model.params.entries()) {
        put_string(os, e.name);
        put<uint8_t>(os, 0);  // dtype 0 = float32
        put<uint8_t>(os, e.trainable ? 1 : 0);
        std::vector<int> dims(e.tensor.shape().begin(), e.tensor.shape().end());
        put_int_list(os, dims);
        put_floats(os, e.tensor.values());
    }

    put<uint32_t>(os, static_cast<uint32_t>(extra.momentum.size()));
    for (const auto& [name, buf] : extra.momentum) {
        put_string(os, name);
        put_floats(os, buf);
    }
    if (!os) throw FileError("write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileError("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FileError("corrupt header: bad magic in '" + path + "'");
    const auto version = get<uint32_t>(is, "version");
    if (version != kVersion)
        throw FileError("version mismatch: checkpoint is v" + std::to_string(version) +
                        ", this build reads v" + std::to_string(kVersion));

    const ModelConfig cfg = get_model_config(is);
    const auto seed = get<uint64_t>(is, "seed");
    Vocabulary vocab = Vocabulary::parse(get_string(is, "vocabulary"));
    Registry registry = Registry::parse(get_string(is, "registry"));

    LoadedCheckpoint out;
    out.extra.loss.tau = get<float>(is, "loss config");
    out.extra.loss.alpha = get<float>(is, "loss config");
    out.extra.loss.beta = get<float>(is, "loss config");
    out.extra.loss.gamma = get<float>(is, "loss config");
    out.extra.loss.normalize = get<uint8_t>(is, "loss config") != 0;

    out.extra.train.batch_size = get<int32_t>(is, "train config");
    out.extra.train.lr = get<float>(is, "train config");
    out.extra.train.momentum = get<float>(is, "train config");
    out.extra.train.weight_decay = get<float>(is, "train config");
    out.extra.train.epochs = get<int32_t>(is, "train config");
    out.extra.train.lr_steps = get_int_list(is, "train config");
    out.extra.train.lr_decay = get<float>(is, "train config");
    out.extra.train.seed = get<uint64_t>(is, "train config");
    out.extra.train.joint = get<uint8_t>(is, "train config") != 0;
    out.extra.train.split = get_string(is, "train config");

    out.extra.epoch = get<int32_t>(is, "epoch");
    for (auto& w : out.extra.rng_state) w = get<uint64_t>(is, "rng state");

    out.model = std::make_unique<Model>(cfg, registry, vocab, seed);

    const auto n_tensors = get<uint32_t>(is, "tensor count");
    std::unordered_set<std::string> filled;
    for (uint32_t i = 0; i < n_tensors; ++i) {
        const std::string name = get_string(is, "tensor name");
        const auto dtype = get<uint8_t>(is, "tensor dtype");
        if (dtype != 0) throw FileError("corrupt header: unknown dtype in tensor '" + name + "'");
        const bool trainable = get<uint8_t>(is, "tensor flags") != 0;
        const auto dims = get_int_list(is, "tensor shape");
        auto data = get_floats(is, "tensor data");
        auto* entry = out.model->params.find(name);
        if (!entry)
            throw CompatibilityError("checkpoint tensor '" + name + "' does not exist in the rebuilt model");
        if (Shape(dims.begin(), dims.end()) != entry->tensor.shape())
            throw CompatibilityError("checkpoint tensor '" + name + "' has mismatched shape");
        if (trainable != entry->trainable)
            throw CompatibilityError("checkpoint tensor '" + name + "' has mismatched trainable flag");
        entry->tensor.mutable_values() = std::move(data);
        filled.insert(name);
    }
    if (filled.size() != out.model->params.entries().size())
        throw CompatibilityError("checkpoint is missing tensors for this configuration");

    const auto n_buffers = get<uint32_t>(is, "buffer count");
    for (uint32_t i = 0; i < n_buffers; ++i) {
        const std::string name = get_string(is, "buffer name");
        out.extra.momentum.emplace_back(name, get_floats(is, "buffer data"));
    }
    return out;
}

}  // namespace senla
