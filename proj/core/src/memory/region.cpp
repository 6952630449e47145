#include "t2sim/memory/region.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace t2sim::memory {

namespace {
constexpr std::array<std::string_view, 6> kKindNames = {
    "flash", "ram", "tcm", "bitband_target", "bitband_alias", "device",
};

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}
} // namespace

std::string_view to_string(RegionKind kind) {
    return kKindNames[static_cast<unsigned>(kind)];
}

std::optional<RegionKind> parse_region_kind(std::string_view text) {
    for (unsigned i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == text) return static_cast<RegionKind>(i);
    }
    return std::nullopt;
}

MemoryMap::MemoryMap(std::vector<RegionDescriptor> regions) : regions_(std::move(regions)) {
    std::stable_sort(regions_.begin(), regions_.end(),
                     [](const RegionDescriptor& a, const RegionDescriptor& b) { return a.base < b.base; });
    for (std::size_t i = 0; i < regions_.size(); ++i) {
        const auto& r = regions_[i];
        if (r.length == 0) throw ConfigError("region '" + r.name + "' has zero length");
        if (r.end() > (std::uint64_t{1} << 32)) throw ConfigError("region '" + r.name + "' extends past 4 GiB");
        if (i > 0 && regions_[i - 1].end() > r.base) {
            throw ConfigError("regions '" + regions_[i - 1].name + "' and '" + r.name + "' overlap at " +
                              hex(r.base));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (regions_[j].name == r.name) throw ConfigError("duplicate region name '" + r.name + "'");
        }
    }

    alias_target_.assign(regions_.size(), regions_.size());
    std::vector<std::size_t> targets;
    for (std::size_t i = 0; i < regions_.size(); ++i) {
        if (regions_[i].kind == RegionKind::BitbandTarget) targets.push_back(i);
    }
    std::vector<unsigned> target_uses(regions_.size(), 0);
    for (std::size_t i = 0; i < regions_.size(); ++i) {
        auto& alias = regions_[i];
        if (alias.kind != RegionKind::BitbandAlias) continue;
        std::size_t t = regions_.size();
        if (!alias.alias_of.empty()) {
            for (std::size_t j = 0; j < regions_.size(); ++j) {
                if (regions_[j].name == alias.alias_of) t = j;
            }
            if (t == regions_.size() || regions_[t].kind != RegionKind::BitbandTarget) {
                throw ConfigError("bit-band alias '" + alias.name + "' names unknown target '" + alias.alias_of + "'");
            }
        } else if (targets.size() == 1) {
            t = targets.front();
        } else {
            throw ConfigError("bit-band alias '" + alias.name + "' must name its target (alias_of)");
        }
        const auto& target = regions_[t];
        if (target.length > kMaxBitbandTarget) {
            throw ConfigError("bit-band target '" + target.name + "' exceeds 1 MiB");
        }
        if (alias.length != target.length * kAliasBytesPerTargetByte) {
            throw ConfigError("bit-band alias '" + alias.name + "' must be exactly 8x the length of '" +
                              target.name + "'");
        }
        alias.writable = true;
        alias.executable = false;
        alias.cached = false;
        alias_target_[i] = t;
        ++target_uses[t];
    }
    for (auto t : targets) {
        if (target_uses[t] > 1) throw ConfigError("bit-band target '" + regions_[t].name + "' has several aliases");
    }
}

std::optional<std::size_t> MemoryMap::find(Address addr) const {
    auto it = std::upper_bound(regions_.begin(), regions_.end(), addr,
                               [](Address a, const RegionDescriptor& r) { return a < r.base; });
    if (it == regions_.begin()) return std::nullopt;
    --it;
    if (!it->contains(addr)) return std::nullopt;
    return static_cast<std::size_t>(it - regions_.begin());
}

const RegionDescriptor* MemoryMap::region_at(Address addr) const {
    auto idx = find(addr);
    return idx ? &regions_[*idx] : nullptr;
}

const RegionDescriptor* MemoryMap::by_name(std::string_view name) const {
    for (const auto& r : regions_) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

std::optional<std::size_t> MemoryMap::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < regions_.size(); ++i) {
        if (regions_[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<BitbandLocation> MemoryMap::translate_bitband(Address addr) const {
    auto idx = find(addr);
    if (!idx || regions_[*idx].kind != RegionKind::BitbandAlias) return std::nullopt;
    const auto& alias = regions_[*idx];
    const auto& target = regions_[alias_target_[*idx]];
    const Address offset = addr - alias.base;
    return BitbandLocation{target.base + offset / kAliasBytesPerTargetByte, offset % kAliasBytesPerTargetByte};
}

} // namespace t2sim::memory
