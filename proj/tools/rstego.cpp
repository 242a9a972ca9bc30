// rstego: corpus generation, training, offline stamp encoding, embedding,
// blind decoding and evaluation from the command line.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rstego/checkpoint.h"
#include "rstego/errors.h"
#include "rstego/trainer.h"

namespace fs = std::filesystem;
using namespace rstego;

namespace {

void require_file(const fs::path& p, const char* what)
{
    if (!fs::is_regular_file(p))
        throw IoError(std::string(what) + " not found: " + p.string());
}

void require_dir(const fs::path& p, const char* what)
{
    if (!fs::is_directory(p))
        throw IoError(std::string(what) + " is not a directory: " + p.string());
}

void require_writable_parent(const fs::path& p)
{
    const fs::path parent = p.parent_path();
    if (!parent.empty() && !fs::is_directory(parent))
        throw IoError("output directory does not exist: " + parent.string());
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text))
        throw IoError("cannot write " + p.string());
}

std::string one_line(std::string s)
{
    for (char& c : s)
        if (c == '\n' || c == '\r')
            c = ' ';
    return s;
}

// ---- train / beta-sweep overrides -----------------------------------------

struct TrainFlags {
    std::string config;
    std::string variant, train_noise, log, checkpoint, image_dir, audio_dir;
    std::optional<std::size_t> iterations, image_side, hop, base_width, checkpoint_every, dtw_decimation;
    std::optional<float> beta, lambda, gamma, lr;
    std::optional<double> train_sigma;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", config, "flat JSON config; flags below override it");
        cmd->add_option("--variant", variant, "res-indep | res-dep | plain-dep | res-scale");
        cmd->add_option("--image-dir", image_dir);
        cmd->add_option("--audio-dir", audio_dir);
        cmd->add_option("--iterations", iterations);
        cmd->add_option("--image-side", image_side);
        cmd->add_option("--hop", hop);
        cmd->add_option("--base-width", base_width);
        cmd->add_option("--beta", beta);
        cmd->add_option("--lambda", lambda);
        cmd->add_option("--gamma", gamma);
        cmd->add_option("--lr", lr);
        cmd->add_option("--seed", seed);
        cmd->add_option("--train-noise", train_noise, "none | awgn | speckle");
        cmd->add_option("--train-sigma", train_sigma);
        cmd->add_option("--checkpoint-every", checkpoint_every);
        cmd->add_option("--dtw-decimation", dtw_decimation);
        cmd->add_option("--log", log, "CSV training log");
        cmd->add_option("--checkpoint", checkpoint, "checkpoint output path");
    }

    TrainConfig resolve() const
    {
        TrainConfig c;
        if (!config.empty())
        {
            require_file(config, "config");
            c = load_config(config);
        }
        if (!variant.empty())
            c.variant = parse_variant(variant);
        if (!image_dir.empty())
            c.image_dir = image_dir;
        if (!audio_dir.empty())
            c.audio_dir = audio_dir;
        if (iterations)
            c.iterations = *iterations;
        if (image_side)
            c.geometry.image_side = *image_side;
        if (hop)
            c.hop = *hop;
        if (base_width)
            c.base_width = *base_width;
        if (beta)
            c.weights.beta = *beta;
        if (lambda)
            c.weights.lambda = *lambda;
        if (gamma)
            c.weights.gamma = *gamma;
        if (lr)
            c.lr = *lr;
        if (seed)
            c.seed = *seed;
        if (!train_noise.empty())
            c.train_noise.kind = parse_noise(train_noise);
        if (train_sigma)
            c.train_noise.sigma = *train_sigma;
        if (checkpoint_every)
            c.checkpoint_every = *checkpoint_every;
        if (dtw_decimation)
            c.dtw_decimation = *dtw_decimation;
        if (!log.empty())
            c.log_path = log;
        if (!checkpoint.empty())
            c.checkpoint_path = checkpoint;
        c.validate();
        require_dir(c.image_dir, "image directory");
        require_dir(c.audio_dir, "audio directory");
        if (!c.log_path.empty())
            require_writable_parent(c.log_path);
        if (!c.checkpoint_path.empty())
            require_writable_parent(c.checkpoint_path);
        return c;
    }
};

// ---- commands -------------------------------------------------------------

struct GenCorpusArgs {
    std::string out;
    CorpusSpec spec;
    std::size_t hop = 63;
    std::size_t tile_rows = 1, tile_cols = 1;
};

void run_gen_corpus(const GenCorpusArgs& a)
{
    CorpusSpec spec = a.spec;
    const StampGeometry g{spec.image_side, a.tile_rows, a.tile_cols};
    g.validate();
    if (spec.clip_samples == 0)
        spec.clip_samples = clip_samples_for(g, a.hop);
    require_writable_parent(a.out);
    generate_corpus(a.out, spec);
    std::cout << "images=" << spec.n_images << " clips=" << spec.n_clips << " side=" << spec.image_side
              << " clip_samples=" << spec.clip_samples << " dir=" << a.out << "\n";
}

void run_train(const TrainFlags& f)
{
    const TrainConfig c = f.resolve();
    const Dataset data(c.dataset_spec());
    const std::size_t every = std::max<std::size_t>(1, c.iterations / 20);
    const TrainResult r = train(c, data, [&](const LogRow& row) {
        if (row.iteration == 1 || row.iteration % every == 0 || row.iteration == c.iterations)
            std::cerr << "iter " << row.iteration << " loss " << row.total_loss << " snr " << row.snr_db.str()
                      << " ssim " << row.ssim << "\n";
    });
    const LogRow& first = r.log.front();
    const LogRow& last = r.log.back();
    std::cout << "iterations=" << last.iteration << " initial_loss=" << first.total_loss
              << " final_loss=" << last.total_loss << " final_snr_db=" << last.snr_db.str()
              << " final_ssim=" << last.ssim << "\n";
}

struct EncodeArgs {
    std::string checkpoint, image, out_stamp;
};

void run_encode(const EncodeArgs& a)
{
    require_file(a.checkpoint, "checkpoint");
    require_file(a.image, "image");
    require_writable_parent(a.out_stamp);
    const std::vector<std::uint8_t> bytes = read_file_bytes(a.checkpoint);
    const StegoNet net(decode_checkpoint(bytes));
    if (!is_cover_independent(net.variant()))
        throw ContractError("cover-dependent variant cannot precompute stamps ("
                            + std::string(variant_name(net.variant())) + ")");
    const Image img = read_image(a.image, net.config().geometry.image_side);
    const Stamp stamp = compute_stamp(net, img, sha256(bytes));
    save_stamp(a.out_stamp, stamp);
    std::cout << "stamp=" << a.out_stamp << " side=" << stamp.geometry.shuffled_side()
              << " bytes=" << fs::file_size(a.out_stamp) << "\n";
}

struct EmbedArgs {
    std::string stamp, host_wav, out_wav;
    std::size_t hop = 63;
    bool pcm16 = false;
};

void run_embed(const EmbedArgs& a)
{
    require_file(a.stamp, "stamp");
    require_file(a.host_wav, "host wav");
    require_writable_parent(a.out_wav);
    const Stamp stamp = load_stamp(a.stamp);
    const Waveform host = read_wav(a.host_wav);
    const std::size_t clip = clip_samples_for(stamp.geometry, a.hop);
    if (host.samples.size() < clip)
        throw DimensionError("host has " + std::to_string(host.samples.size()) + " samples, stamp geometry needs "
                             + std::to_string(clip));

    const Spectrogram host_spec =
        stdct(std::span(host.samples).first(clip), stamp.geometry.bins(), a.hop);
    Waveform container;
    container.sample_rate = host.sample_rate;
    container.samples = istdct(embed(stamp, host_spec));
    container.samples.insert(container.samples.end(), host.samples.begin() + static_cast<std::ptrdiff_t>(clip),
                             host.samples.end());

    const auto bytes = encode_wav(container, a.pcm16 ? WavEncoding::Pcm16 : WavEncoding::Float32);
    write_file_bytes(a.out_wav, bytes);
    const Waveform written = decode_wav(bytes);
    std::cerr << "snr_db=" << snr_db(host.samples, written.samples).str() << "\n";
    std::cout << "container=" << a.out_wav << " samples=" << written.samples.size() << "\n";
}

struct DecodeArgs {
    std::string checkpoint, container_wav, out_image, host_wav;
};

void run_decode(const DecodeArgs& a)
{
    require_file(a.checkpoint, "checkpoint");
    require_file(a.container_wav, "container wav");
    if (!a.host_wav.empty())
        require_file(a.host_wav, "host wav");
    require_writable_parent(a.out_image);
    const StegoNet net(load_checkpoint(a.checkpoint));
    const StegoConfig& cfg = net.config();
    const Waveform container = read_wav(a.container_wav);
    const std::size_t clip = cfg.clip_samples();
    if (container.samples.size() < clip)
        throw DimensionError("container has " + std::to_string(container.samples.size()) + " samples, decoding needs "
                             + std::to_string(clip));

    const Spectrogram spect = stdct(std::span(container.samples).first(clip), cfg.frame_len(), cfg.hop);
    const std::vector<float> revealed = reveal(net, spect);
    const std::size_t side = cfg.geometry.image_side;
    write_image(a.out_image, planar_to_image(revealed, side, side));
    std::cout << "image=" << a.out_image << " side=" << side;
    if (!a.host_wav.empty())
        std::cout << " snr_db=" << snr_db(read_wav(a.host_wav).samples, container.samples).str();
    std::cout << "\n";
}

struct EvaluateArgs {
    std::string checkpoint, image_dir, audio_dir, out;
    std::vector<std::string> noise{"awgn"};
    std::vector<double> sigmas{0.0};
    std::uint64_t pairing_seed = 0;
    std::uint64_t noise_seed = 0;
    long misalign = 0;
};

void run_evaluate(const EvaluateArgs& a)
{
    require_file(a.checkpoint, "checkpoint");
    require_dir(a.image_dir, "image directory");
    require_dir(a.audio_dir, "audio directory");
    if (!a.out.empty())
        require_writable_parent(a.out);
    std::vector<NoiseKind> kinds;
    for (const auto& n : a.noise)
        kinds.push_back(parse_noise(n));
    for (double s : a.sigmas)
        if (!(s >= 0.0))
            throw ContractError("sigma values must be non-negative");
    const StegoNet net(load_checkpoint(a.checkpoint));
    const Dataset data(DatasetSpec{a.image_dir, a.audio_dir, net.config().geometry.image_side,
                                   net.config().clip_samples(), a.pairing_seed});
    const std::string csv = eval_csv(evaluate(net, data, kinds, a.sigmas, a.noise_seed, a.misalign));
    if (a.out.empty())
        std::cout << csv;
    else
        write_text(a.out, csv);
}

struct SweepArgs {
    TrainFlags flags;
    std::vector<float> betas;
    std::string out;
};

void run_beta_sweep(const SweepArgs& a)
{
    if (!a.out.empty())
        require_writable_parent(a.out);
    const TrainConfig c = a.flags.resolve();
    for (float b : a.betas)
        if (!(b >= 0.f && b <= 1.f))
            throw ContractError("beta values must lie in [0,1]");
    const Dataset data(c.dataset_spec());
    const std::string csv = sweep_csv(beta_sweep(c, a.betas, data));
    if (a.out.empty())
        std::cout << csv;
    else
        write_text(a.out, csv);
}

struct CapacityArgs {
    std::size_t side = 256;
    std::size_t clip_samples = 67522;
    std::uint32_t sample_rate = 44100;
};

void run_capacity(const CapacityArgs& a)
{
    const double bps = capacity_bps(a.side, a.clip_samples, a.sample_rate);
    char buf[160];
    std::snprintf(buf, sizeof buf, "capacity_bps=%.1f capacity_kbps=%.2f (side=%zu clip_samples=%zu sample_rate=%u)",
                  bps, bps / 1000.0, a.side, a.clip_samples, a.sample_rate);
    std::cout << buf << "\n";
}

const char* error_kind(const std::exception& e)
{
    if (dynamic_cast<const DimensionError*>(&e))
        return "dimension";
    if (dynamic_cast<const NumericError*>(&e))
        return "numeric";
    if (dynamic_cast<const ContractError*>(&e))
        return "contract";
    if (dynamic_cast<const FormatError*>(&e))
        return "format";
    if (dynamic_cast<const IoError*>(&e))
        return "io";
    return "internal";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"audio steganography: hide images in audio spectrograms"};
    app.require_subcommand(1);

    GenCorpusArgs gen;
    auto* c_gen = app.add_subcommand("gen-corpus", "write a synthetic image/audio corpus");
    c_gen->add_option("--out", gen.out, "output directory")->required();
    c_gen->add_option("--images", gen.spec.n_images);
    c_gen->add_option("--clips", gen.spec.n_clips);
    c_gen->add_option("--image-side", gen.spec.image_side);
    c_gen->add_option("--hop", gen.hop, "hop used to derive the clip length");
    c_gen->add_option("--tile-rows", gen.tile_rows);
    c_gen->add_option("--tile-cols", gen.tile_cols);
    c_gen->add_option("--clip-samples", gen.spec.clip_samples, "override the derived clip length");
    c_gen->add_option("--sample-rate", gen.spec.sample_rate);
    c_gen->add_option("--seed", gen.spec.seed);

    TrainFlags train_flags;
    auto* c_train = app.add_subcommand("train", "train a model end to end");
    train_flags.attach(c_train);

    EncodeArgs enc;
    auto* c_enc = app.add_subcommand("encode", "precompute a host-independent stamp for an image");
    c_enc->add_option("--checkpoint", enc.checkpoint)->required();
    c_enc->add_option("--image", enc.image)->required();
    c_enc->add_option("--out-stamp", enc.out_stamp)->required();

    EmbedArgs emb;
    auto* c_emb = app.add_subcommand("embed", "add a stamp to a host waveform");
    c_emb->add_option("--stamp", emb.stamp)->required();
    c_emb->add_option("--host-wav", emb.host_wav)->required();
    c_emb->add_option("--out-wav", emb.out_wav)->required();
    c_emb->add_option("--hop", emb.hop, "STDCT hop the model was trained with");
    c_emb->add_flag("--pcm16", emb.pcm16, "write 16-bit PCM instead of float32");

    DecodeArgs dec;
    auto* c_dec = app.add_subcommand("decode", "reveal the hidden image from a container");
    c_dec->add_option("--checkpoint", dec.checkpoint)->required();
    c_dec->add_option("--container-wav", dec.container_wav)->required();
    c_dec->add_option("--out-image", dec.out_image)->required();
    c_dec->add_option("--host-wav", dec.host_wav, "original host, only for SNR reporting");

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "metrics over a noise grid");
    c_ev->add_option("--checkpoint", ev.checkpoint)->required();
    c_ev->add_option("--image-dir", ev.image_dir)->required();
    c_ev->add_option("--audio-dir", ev.audio_dir)->required();
    c_ev->add_option("--noise", ev.noise, "comma-separated noise kinds")->delimiter(',');
    c_ev->add_option("--sigmas", ev.sigmas, "comma-separated relative noise levels")->delimiter(',');
    c_ev->add_option("--pairing-seed", ev.pairing_seed);
    c_ev->add_option("--noise-seed", ev.noise_seed);
    c_ev->add_option("--misalign", ev.misalign, "circular shift of the received waveform in samples");
    c_ev->add_option("--out", ev.out, "CSV path (default stdout)");

    SweepArgs sw;
    auto* c_sw = app.add_subcommand("beta-sweep", "train one model per beta and evaluate noise-free");
    sw.flags.attach(c_sw);
    c_sw->add_option("--betas", sw.betas, "comma-separated beta values")->delimiter(',')->required();
    c_sw->add_option("--out", sw.out, "CSV path (default stdout)");

    CapacityArgs cap;
    auto* c_cap = app.add_subcommand("capacity", "payload bit rate for a geometry");
    c_cap->add_option("--image-side", cap.side);
    c_cap->add_option("--clip-samples", cap.clip_samples);
    c_cap->add_option("--sample-rate", cap.sample_rate);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        std::cerr << "error: usage: " << one_line(e.what()) << "\n";
        return 2;
    }

    try
    {
        if (c_gen->parsed())
            run_gen_corpus(gen);
        else if (c_train->parsed())
            run_train(train_flags);
        else if (c_enc->parsed())
            run_encode(enc);
        else if (c_emb->parsed())
            run_embed(emb);
        else if (c_dec->parsed())
            run_decode(dec);
        else if (c_ev->parsed())
            run_evaluate(ev);
        else if (c_sw->parsed())
            run_beta_sweep(sw);
        else if (c_cap->parsed())
            run_capacity(cap);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << error_kind(e) << ": " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
