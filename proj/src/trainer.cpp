#include "rstego/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rstego/adam.h"
#include "rstego/errors.h"
#include "rstego/ops.h"

namespace rstego {

namespace {

constexpr float kDivergenceFactor = 10.f;
constexpr std::size_t kDivergencePatience = 100;

std::string fmt_float(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::vector<float> scaled_255(const Tensor& normalized)
{
    std::vector<float> out(normalized.data().begin(), normalized.data().end());
    for (float& v : out)
        v *= 255.f;
    return out;
}

// Tensors of the iteration in flight, kept for the non-finite diagnostic dump.
struct Snapshot {
    Tensor image, host, encoded, container, received, revealed;

    std::vector<NamedTensor> named() const
    {
        std::vector<NamedTensor> out;
        auto push = [&](const char* name, const Tensor& t) {
            if (t.defined())
                out.push_back({name, t.clone()});
        };
        push("image", image);
        push("host_spectrogram", host);
        push("encoded", encoded);
        push("container_spectrogram", container);
        push("received_spectrogram", received);
        push("revealed", revealed);
        return out;
    }
};

std::filesystem::path dump_path(const TrainConfig& c)
{
    if (!c.checkpoint_path.empty())
        return c.checkpoint_path.string() + ".nonfinite";
    if (!c.log_path.empty())
        return c.log_path.string() + ".nonfinite";
    return "rstego.nonfinite";
}

void save_net(const StegoNet& net, const std::filesystem::path& path)
{
    if (!path.empty())
        save_checkpoint(path, net.checkpoint_tensors());
}

} // namespace

std::string format_log_row(const LogRow& r)
{
    return std::to_string(r.iteration) + "," + fmt_float(r.total_loss) + "," + fmt_float(r.image_mae) + ","
           + fmt_float(r.audio_mse) + "," + fmt_float(r.dtw_term) + ","
           + (r.snr_db.is_infinite() ? std::string("inf") : fmt_float(r.snr_db.value())) + "," + fmt_float(r.ssim);
}

TrainResult train(const TrainConfig& config, const Dataset& data, const ProgressFn& progress)
{
    config.validate();
    const StampGeometry& g = config.geometry;
    if (data.spec().image_side != g.image_side || data.spec().clip_samples != config.clip_samples())
        throw DimensionError("train: dataset geometry (side " + std::to_string(data.spec().image_side) + ", "
                             + std::to_string(data.spec().clip_samples) + " samples) does not match config (side "
                             + std::to_string(g.image_side) + ", " + std::to_string(config.clip_samples()) + " samples)");

    StegoNet net(config.stego(), config.seed);
    Adam adam(net.parameters(), AdamOptions{config.lr});
    PairIterator pairs(data);

    std::ofstream log;
    if (!config.log_path.empty())
    {
        log.open(config.log_path, std::ios::trunc);
        if (!log)
            throw IoError("cannot write log " + config.log_path.string());
        log << "# config " << config_to_json(config) << "\n" << kLogHeader << "\n";
    }

    const std::size_t frame_len = config.stego().frame_len();
    const std::size_t side = g.image_side;
    std::vector<LogRow> rows;
    rows.reserve(config.iterations);
    float initial_loss = 0.f;
    std::size_t over_budget = 0;

    for (std::size_t it = 1; it <= config.iterations; it++)
    {
        const Pair pair = pairs.next();
        Snapshot snap;
        try
        {
            Tape tape;
            snap.image = normalize_image(*pair.image);
            const Spectrogram host_spec = stdct(pair.segment, frame_len, config.hop);
            snap.host = Tensor({host_spec.bins(), host_spec.frames()}, host_spec.values);
            const Tensor host_wave({config.clip_samples()}, istdct(host_spec));

            const EmbedResult emb = net.embed(tape, snap.image, snap.host);
            snap.encoded = emb.encoded;
            snap.container = emb.container;
            const Tensor container_wave = istdct(tape, emb.container, config.hop);

            NoiseSpec noise = config.train_noise;
            noise.seed = config.seed + it;
            const NoiseDraw draw = draw_noise(container_wave.data(), noise);
            Tensor received_wave = container_wave;
            if (!draw.offset.empty())
                received_wave = add_const(tape, container_wave, draw.offset);
            else if (!draw.gain.empty())
                received_wave = mul_const(tape, container_wave, draw.gain);

            snap.received = stdct(tape, received_wave, frame_len, config.hop);
            snap.revealed = net.reveal_raw(tape, snap.received);

            const LossTerms terms = total_loss(tape, snap.image, snap.revealed, snap.host, emb.container, host_wave,
                                               container_wave, config.weights, config.dtw_decimation);
            check_finite(terms.total.data(), "total loss");

            adam.zero_grad();
            tape.backward(terms.total);
            adam.step();

            LogRow row;
            row.iteration = it;
            row.total_loss = terms.total.item();
            row.image_mae = terms.image_mae;
            row.audio_mse = terms.audio_mse;
            row.dtw_term = terms.dtw;
            row.snr_db = snr_db(host_wave.data(), container_wave.data());
            row.ssim = ssim(scaled_255(snap.image), denormalize(snap.revealed), 3, side, side);
            if (log)
                log << format_log_row(row) << "\n";
            if (progress)
                progress(row);

            if (it == 1)
                initial_loss = row.total_loss;
            else if (row.total_loss > kDivergenceFactor * initial_loss)
            {
                if (++over_budget >= kDivergencePatience)
                    throw NumericError("training diverged: loss above " + fmt_float(kDivergenceFactor * initial_loss)
                                       + " for " + std::to_string(kDivergencePatience) + " consecutive iterations");
            }
            else
                over_budget = 0;
            rows.push_back(row);
        }
        catch (const NumericError& e)
        {
            const auto path = dump_path(config);
            try
            {
                save_checkpoint(path, snap.named());
            }
            catch (const std::exception&)
            {
            }
            throw NumericError("iteration " + std::to_string(it) + ": " + e.what() + " (tensors dumped to "
                               + path.string() + ")");
        }

        if (config.checkpoint_every > 0 && it % config.checkpoint_every == 0)
            save_net(net, config.checkpoint_path);
    }
    save_net(net, config.checkpoint_path);
    return TrainResult{std::move(net), std::move(rows)};
}

PipelineOutput run_pipeline(const StegoNet& net, const Image& image, const Waveform& host, const NoiseSpec& noise,
                            long misalign_offset)
{
    const StegoConfig& cfg = net.config();
    const std::size_t clip = cfg.clip_samples();
    if (host.samples.size() < clip)
        throw DimensionError("pipeline: host has " + std::to_string(host.samples.size()) + " samples, need "
                             + std::to_string(clip));
    Tape tape = Tape::inference();
    const Spectrogram host_spec = stdct(std::span(host.samples).first(clip), cfg.frame_len(), cfg.hop);
    const Tensor host_t({host_spec.bins(), host_spec.frames()}, host_spec.values);
    const Tensor img = normalize_image(image);
    const EmbedResult emb = net.embed(tape, img, host_t);

    Spectrogram container_spec = host_spec;
    container_spec.values.assign(emb.container.data().begin(), emb.container.data().end());
    PipelineOutput out;
    out.container.sample_rate = host.sample_rate;
    out.container.samples = istdct(container_spec);
    // Samples past the clip pass through untouched.
    out.container.samples.insert(out.container.samples.end(), host.samples.begin() + static_cast<std::ptrdiff_t>(clip),
                                 host.samples.end());

    out.received = apply_noise(out.container, noise);
    if (misalign_offset != 0)
        out.received = misalign(out.received, misalign_offset);

    const Spectrogram received_spec =
        stdct(std::span(out.received.samples).first(clip), cfg.frame_len(), cfg.hop);
    out.revealed = reveal(net, received_spec);

    const std::vector<float> original = image_to_planar(image);
    out.metrics.audio_snr = snr_db(host.samples, out.container.samples);
    out.metrics.image_ssim = ssim(original, out.revealed, 3, image.height, image.width);
    out.metrics.image_psnr = psnr(original, out.revealed);
    return out;
}

std::vector<EvalCell> evaluate(const StegoNet& net, const Dataset& data, const std::vector<NoiseKind>& kinds,
                               const std::vector<double>& sigmas, std::uint64_t noise_seed, long misalign_offset)
{
    const StegoConfig& cfg = net.config();
    if (data.spec().image_side != cfg.geometry.image_side || data.spec().clip_samples != cfg.clip_samples())
        throw DimensionError("evaluate: dataset geometry does not match the checkpoint");
    const std::vector<Pair> pairs = data.epoch(0);
    std::vector<EvalCell> cells;
    for (NoiseKind kind : kinds)
    {
        for (double sigma : sigmas)
        {
            std::vector<PairMetrics> per_pair;
            for (std::size_t i = 0; i < pairs.size(); i++)
            {
                const NoiseSpec spec{kind, sigma, noise_seed + i};
                per_pair.push_back(run_pipeline(net, *pairs[i].image, pairs[i].segment, spec, misalign_offset).metrics);
            }
            cells.push_back({kind, sigma, MetricsReport::aggregate(std::move(per_pair))});
        }
    }
    return cells;
}

std::string eval_csv(const std::vector<EvalCell>& cells)
{
    std::ostringstream os;
    os << "noise,sigma,snr_db,ssim,psnr_db\n";
    for (const EvalCell& c : cells)
        os << noise_name(c.kind) << "," << fmt_float(c.sigma) << "," << c.report.audio_snr_db.str() << ","
           << fmt_float(c.report.image_ssim) << "," << c.report.image_psnr_db.str() << "\n";
    return os.str();
}

std::vector<SweepRow> beta_sweep(const TrainConfig& base, const std::vector<float>& betas, const Dataset& data)
{
    std::vector<SweepRow> rows;
    for (float beta : betas)
    {
        if (!(beta >= 0.f && beta <= 1.f))
            throw ContractError("beta_sweep: beta " + std::to_string(beta) + " outside [0,1]");
        TrainConfig c = base;
        c.weights.beta = beta;
        c.log_path.clear();
        c.checkpoint_path.clear();
        const TrainResult r = train(c, data);
        const auto cells = evaluate(r.net, data, {NoiseKind::None}, {0.0});
        const MetricsReport& m = cells.front().report;
        rows.push_back({beta, m.audio_snr_db, m.image_ssim, m.image_psnr_db});
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os << "beta,snr_db,ssim,psnr_db\n";
    for (const SweepRow& r : rows)
        os << fmt_float(r.beta) << "," << r.snr_db.str() << "," << fmt_float(r.ssim) << "," << r.psnr_db.str() << "\n";
    return os.str();
}

double capacity_bps(std::size_t image_side, std::size_t clip_samples, std::uint32_t sample_rate)
{
    if (image_side == 0 || clip_samples == 0 || sample_rate == 0)
        throw ContractError("capacity: side, clip length and sample rate must be positive");
    const double bits = static_cast<double>(image_side) * static_cast<double>(image_side) * 3.0 * 8.0;
    const double seconds = static_cast<double>(clip_samples) / static_cast<double>(sample_rate);
    return bits / seconds;
}

} // namespace rstego
