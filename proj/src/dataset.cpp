#include <algorithm>
#include <numeric>

#include "rstego/data_io.h"
#include "rstego/errors.h"

namespace rstego {

namespace {

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& ext)
{
    if (!std::filesystem::is_directory(dir))
        throw IoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext)
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

Dataset::Dataset(DatasetSpec spec)
    : spec_(std::move(spec))
{
    for (const auto& p : list_files(spec_.image_dir, ".ppm"))
        images_.push_back(read_image(p, spec_.image_side));
    for (const auto& p : list_files(spec_.audio_dir, ".wav"))
        clips_.push_back(read_wav(p));
    validate();
}

Dataset::Dataset(DatasetSpec spec, std::vector<Image> images, std::vector<Waveform> clips)
    : spec_(std::move(spec)), images_(std::move(images)), clips_(std::move(clips))
{
    for (Image& img : images_)
        if (img.width != spec_.image_side || img.height != spec_.image_side)
            img = crop_resize(img, spec_.image_side);
    validate();
}

void Dataset::validate() const
{
    if (images_.empty())
        throw ContractError("dataset: empty corpus (no .ppm images)");
    if (clips_.empty())
        throw ContractError("dataset: empty corpus (no .wav clips)");
    if (spec_.clip_samples == 0)
        throw ContractError("dataset: clip_samples must be positive");
    for (std::size_t i = 0; i < clips_.size(); i++)
        if (clips_[i].samples.size() < spec_.clip_samples)
            throw DimensionError("dataset: clip " + std::to_string(i) + " has " + std::to_string(clips_[i].samples.size())
                                + " samples, need at least " + std::to_string(spec_.clip_samples));
}

std::vector<Pair> Dataset::epoch(std::uint64_t epoch_index) const
{
    std::seed_seq seq{static_cast<std::uint32_t>(spec_.pairing_seed), static_cast<std::uint32_t>(spec_.pairing_seed >> 32),
                      static_cast<std::uint32_t>(epoch_index), static_cast<std::uint32_t>(epoch_index >> 32)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order(images_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::uniform_int_distribution<std::size_t> pick_clip(0, clips_.size() - 1);
    std::vector<Pair> pairs;
    pairs.reserve(order.size());
    for (std::size_t idx : order)
    {
        Pair p;
        p.image_index = idx;
        p.image = &images_[idx];
        p.clip_index = pick_clip(rng);
        const Waveform& clip = clips_[p.clip_index];
        std::uniform_int_distribution<std::size_t> pick_offset(0, clip.samples.size() - spec_.clip_samples);
        p.offset = pick_offset(rng);
        p.segment.sample_rate = clip.sample_rate;
        p.segment.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(p.offset),
                                 clip.samples.begin() + static_cast<std::ptrdiff_t>(p.offset + spec_.clip_samples));
        pairs.push_back(std::move(p));
    }
    return pairs;
}

Pair PairIterator::next()
{
    if (pos_ >= current_.size())
    {
        if (!current_.empty())
            epoch_++;
        current_ = data_->epoch(epoch_);
        pos_ = 0;
    }
    return current_[pos_++];
}

} // namespace rstego
