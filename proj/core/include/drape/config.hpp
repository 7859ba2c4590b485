#pragma once

#include "drape/dataset.hpp"
#include "drape/deformer.hpp"
#include "drape/losses.hpp"
#include "drape/optim.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace drape {

struct Config {
    SynthConfig data;

    // Model.
    int hidden = 64;
    int embedding = 4;
    OffsetRanges ranges;
    double init_scale = 0.012;
    double init_opacity = 0.9;
    double init_color = 0.5;

    LossWeights weights;
    // Indexed by GroupId.
    std::array<AdamSettings, 5> optim{default_settings(GroupId::branch_src), default_settings(GroupId::branch_tar),
                                      default_settings(GroupId::nld), default_settings(GroupId::flows),
                                      default_settings(GroupId::discriminator)};

    int iterations = 600;
    int checkpoint_every = 0;  // 0: final checkpoint only
    int patches = 8;           // discriminator patches per frame
    int threads = 0;           // 0: OpenMP default

    bool enable_nld = true;
    bool enable_rfr = true;
    bool enable_adv = true;

    AdamSettings& settings(GroupId id) { return optim[static_cast<int>(id)]; }
    const AdamSettings& settings(GroupId id) const { return optim[static_cast<int>(id)]; }

    void validate() const;

    // Canonical key=value text, keys in registry order.
    std::string to_text() const;
    // Hash of every key that affects the optimization trajectory (all keys
    // except iterations and checkpoint_every), so a run may be resumed with a
    // larger iteration budget.
    std::uint64_t hash() const;
};

// Documented keys, in canonical order.
std::vector<std::string> config_keys();

// Flat UTF-8 key=value text. '#' starts a comment; blank lines are ignored;
// unknown or repeated keys and malformed values raise ValidationError.
// Keys that are absent keep their defaults.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
void set_config_value(Config& config, const std::string& key, const std::string& value);

// full, no_nld, no_rfr, no_adv: the four toggle combinations.
inline constexpr std::array<const char*, 4> kVariants{"full", "no_nld", "no_rfr", "no_adv"};
Config apply_variant(Config config, const std::string& variant);
// Name of the toggle combination, or "custom" when it is none of the four.
std::string variant_name(const Config& config);

}  // namespace drape
