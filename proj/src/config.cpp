#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rstego/errors.h"
#include "rstego/trainer.h"

namespace rstego {

using nlohmann::json;

StegoConfig TrainConfig::stego() const
{
    return StegoConfig{variant, geometry, base_width, hop, sample_rate};
}

DatasetSpec TrainConfig::dataset_spec() const
{
    return DatasetSpec{image_dir, audio_dir, geometry.image_side, clip_samples(), seed};
}

void TrainConfig::validate() const
{
    geometry.validate();
    weights.validate();
    if (hop == 0 || hop > geometry.bins())
        throw ContractError("config: hop must be in [1, frame_len=" + std::to_string(geometry.bins()) + "]");
    if (sample_rate == 0)
        throw ContractError("config: sample_rate must be positive");
    if (base_width == 0)
        throw ContractError("config: base_width must be positive");
    if (!(lr > 0.f))
        throw ContractError("config: lr must be positive");
    if (batch != 1)
        throw ContractError("config: only batch size 1 is supported");
    if (iterations == 0)
        throw ContractError("config: iterations must be at least 1");
    if (dtw_decimation == 0)
        throw ContractError("config: dtw_decimation must be positive");
    if (train_noise.sigma < 0.0)
        throw ContractError("config: train_sigma must be non-negative");
}

std::string config_to_json(const TrainConfig& c)
{
    json j;
    j["variant"] = std::string(variant_name(c.variant));
    j["image_side"] = c.geometry.image_side;
    j["tile_rows"] = c.geometry.tile_rows;
    j["tile_cols"] = c.geometry.tile_cols;
    j["hop"] = c.hop;
    j["sample_rate"] = c.sample_rate;
    j["base_width"] = c.base_width;
    j["beta"] = c.weights.beta;
    j["lambda"] = c.weights.lambda;
    j["gamma"] = c.weights.gamma;
    j["lr"] = c.lr;
    j["batch"] = c.batch;
    j["iterations"] = c.iterations;
    j["train_noise"] = std::string(noise_name(c.train_noise.kind));
    j["train_sigma"] = c.train_noise.sigma;
    j["seed"] = c.seed;
    j["checkpoint_every"] = c.checkpoint_every;
    j["dtw_decimation"] = c.dtw_decimation;
    j["log_path"] = c.log_path.string();
    j["checkpoint_path"] = c.checkpoint_path.string();
    j["image_dir"] = c.image_dir.string();
    j["audio_dir"] = c.audio_dir.string();
    return j.dump();
}

TrainConfig config_from_json(const std::string& text, TrainConfig c)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw FormatError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw FormatError("config: top level must be a JSON object");
    static const std::set<std::string> known = {
        "variant", "image_side", "tile_rows", "tile_cols", "hop", "sample_rate", "base_width", "beta",
        "lambda", "gamma", "lr", "batch", "iterations", "train_noise", "train_sigma", "seed",
        "checkpoint_every", "dtw_decimation", "log_path", "checkpoint_path", "image_dir", "audio_dir"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw FormatError("config: unknown key '" + it.key() + "'");
    try
    {
        if (j.contains("variant"))
            c.variant = parse_variant(j["variant"].get<std::string>());
        if (j.contains("image_side"))
            c.geometry.image_side = j["image_side"].get<std::size_t>();
        if (j.contains("tile_rows"))
            c.geometry.tile_rows = j["tile_rows"].get<std::size_t>();
        if (j.contains("tile_cols"))
            c.geometry.tile_cols = j["tile_cols"].get<std::size_t>();
        if (j.contains("hop"))
            c.hop = j["hop"].get<std::size_t>();
        if (j.contains("sample_rate"))
            c.sample_rate = j["sample_rate"].get<std::uint32_t>();
        if (j.contains("base_width"))
            c.base_width = j["base_width"].get<std::size_t>();
        if (j.contains("beta"))
            c.weights.beta = j["beta"].get<float>();
        if (j.contains("lambda"))
            c.weights.lambda = j["lambda"].get<float>();
        if (j.contains("gamma"))
            c.weights.gamma = j["gamma"].get<float>();
        if (j.contains("lr"))
            c.lr = j["lr"].get<float>();
        if (j.contains("batch"))
            c.batch = j["batch"].get<std::size_t>();
        if (j.contains("iterations"))
            c.iterations = j["iterations"].get<std::size_t>();
        if (j.contains("train_noise"))
            c.train_noise.kind = parse_noise(j["train_noise"].get<std::string>());
        if (j.contains("train_sigma"))
            c.train_noise.sigma = j["train_sigma"].get<double>();
        if (j.contains("seed"))
            c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("checkpoint_every"))
            c.checkpoint_every = j["checkpoint_every"].get<std::size_t>();
        if (j.contains("dtw_decimation"))
            c.dtw_decimation = j["dtw_decimation"].get<std::size_t>();
        if (j.contains("log_path"))
            c.log_path = j["log_path"].get<std::string>();
        if (j.contains("checkpoint_path"))
            c.checkpoint_path = j["checkpoint_path"].get<std::string>();
        if (j.contains("image_dir"))
            c.image_dir = j["image_dir"].get<std::string>();
        if (j.contains("audio_dir"))
            c.audio_dir = j["audio_dir"].get<std::string>();
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("config: wrong value type: ") + e.what());
    }
    return c;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str(), std::move(base));
}

} // namespace rstego
