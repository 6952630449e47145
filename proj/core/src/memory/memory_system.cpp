#include "t2sim/memory/memory_system.hpp"

#include <bit>
#include <string>
#include <utility>

#include "t2sim/isa/encoding.hpp"

namespace t2sim::memory {

namespace {

constexpr std::uint64_t kMaxStorageBytes = 64ull << 20;

Word merge_bytes(Word old_word, unsigned byte_offset, unsigned size, Word value) {
    Word mask = size >= 4 ? 0xFFFFFFFFu : ((1u << (8 * size)) - 1u);
    mask <<= 8 * byte_offset;
    return (old_word & ~mask) | ((value << (8 * byte_offset)) & mask);
}

Word extract_bytes(Word word, unsigned byte_offset, unsigned size) {
    const Word shifted = word >> (8 * byte_offset);
    return size >= 4 ? shifted : shifted & ((1u << (8 * size)) - 1u);
}

} // namespace

MemoryConfig default_memory_config() {
    MemoryConfig cfg;
    RegionDescriptor flash{"flash", 0x00000000, 256 * 1024, RegionKind::Flash, false, true, false, 0, ""};
    RegionDescriptor tcm{"tcm", 0x10000000, 16 * 1024, RegionKind::Tcm, true, true, false, 0, ""};
    RegionDescriptor sram{"sram", 0x20000000, 64 * 1024, RegionKind::BitbandTarget, true, true, false, 0, ""};
    RegionDescriptor alias{"sram_alias", 0x22000000, 512 * 1024, RegionKind::BitbandAlias, true, false, false, 0, "sram"};
    RegionDescriptor sysctl{"sysctl", 0xE000E000, 4096, RegionKind::Device, true, false, false, 1, ""};
    cfg.regions = {flash, tcm, sram, alias, sysctl};
    return cfg;
}

MemorySystem::MemorySystem(MemoryConfig config)
    : config_(std::move(config)),
      map_(config_.regions),
      flash_(config_.flash),
      icache_(config_.icache),
      dcache_(config_.dcache) {
    storage_.resize(map_.regions().size());
    for (std::size_t i = 0; i < map_.regions().size(); ++i) {
        const auto& r = map_.regions()[i];
        if (!r.has_storage()) continue;
        if (r.length > kMaxStorageBytes) {
            throw ConfigError("region '" + r.name + "' is larger than the 64 MiB storage limit");
        }
        storage_[i].bytes.assign(r.length, 0);
        if (r.kind == RegionKind::Tcm) {
            storage_[i].golden.assign(r.length, 0);
            storage_[i].word_parity.assign((r.length + 3) / 4, 0);
        }
    }
}

std::optional<Word> MemorySystem::raw_read(std::size_t region, Address addr, unsigned size) const {
    const auto& r = map_.regions()[region];
    if (!r.has_storage() || !r.contains(addr, size)) return std::nullopt;
    const auto& bytes = storage_[region].bytes;
    const std::size_t off = addr - r.base;
    Word v = 0;
    for (unsigned i = 0; i < size; ++i) v |= Word{bytes[off + i]} << (8 * i);
    return v;
}

void MemorySystem::raw_write(std::size_t region, Address addr, unsigned size, Word value) {
    const auto& r = map_.regions()[region];
    auto& st = storage_[region];
    const std::size_t off = addr - r.base;
    for (unsigned i = 0; i < size; ++i) {
        const auto b = static_cast<std::uint8_t>(value >> (8 * i));
        st.bytes[off + i] = b;
        if (!st.golden.empty()) st.golden[off + i] = b;
    }
}

Word MemorySystem::line_word_from_backing(Address addr) const {
    auto idx = map_.find(addr);
    if (!idx) return 0;
    return raw_read(*idx, addr, 4).value_or(0);
}

void MemorySystem::note(EventKind kind, Address addr, Cycles offset, Cycles cost, std::vector<TraceField> detail) {
    events_.push_back(MemEvent{kind, addr, offset, cost, std::move(detail)});
}

void MemorySystem::bump(std::uint64_t Counters::*field, std::uint64_t by) {
    if (counters_) counters_->*field += by;
}

std::vector<MemEvent> MemorySystem::drain_events() {
    std::vector<MemEvent> out;
    out.swap(events_);
    return out;
}

bool MemorySystem::is_device(Address addr) const {
    const auto* r = map_.region_at(addr);
    return r && r->kind == RegionKind::Device;
}

bool MemorySystem::range_touches_device(Address addr, std::uint64_t bytes) const {
    for (const auto& r : map_.regions()) {
        if (r.kind != RegionKind::Device) continue;
        if (std::uint64_t{addr} < r.end() && std::uint64_t{addr} + bytes > r.base) return true;
    }
    return false;
}

// ---------------------------------------------------------------- data side

MemResult MemorySystem::cached_read(std::size_t region, Address addr, unsigned size, Cycles start_offset) {
    (void)region;
    MemResult res;
    const unsigned index = dcache_.index_of(addr);
    const std::uint32_t tag = dcache_.tag_of(addr);
    CacheLine& line = dcache_.line(index);
    const Address line_addr = Cache::line_base(addr);

    bool hit = false;
    if (line.valid && line.tag_parity) {
        bump(&Counters::dcache_tag_errors);
        note(EventKind::Miss, line_addr, start_offset, 0, {{"cache", std::string("dcache")}, {"reason", std::string("tag_parity")}});
    } else if (line.valid && line.tag == tag) {
        hit = true;
    }

    if (hit) {
        res.cycles = dcache_.config().hit_cycles;
    } else {
        if (!(line.valid && line.tag_parity)) {
            note(EventKind::Miss, line_addr, start_offset, 0, {{"cache", std::string("dcache")}, {"reason", std::string("cold")}});
        }
        bump(&Counters::dcache_misses);
        std::array<Word, kLineWords> data{};
        for (unsigned i = 0; i < kLineWords; ++i) data[i] = line_word_from_backing(line_addr + 4 * i);
        dcache_.fill(index, tag, data);
        res.cycles = dcache_.config().fill_cycles_per_line;
        res.filled_line = true;
        bump(&Counters::dcache_fills);
        note(EventKind::Fill, line_addr, start_offset + res.cycles, res.cycles, {{"cache", std::string("dcache")}});
    }

    const unsigned word = (addr % kLineBytes) / 4;
    if (line.word_parity & (1u << word)) {
        res.fault = MemFault::DcacheParity;
        return res;
    }
    res.value = extract_bytes(line.data[word], addr % 4, size);
    return res;
}

MemResult MemorySystem::tcm_read(std::size_t region, Address addr, unsigned size, Cycles start_offset) {
    MemResult res;
    const auto& r = map_.regions()[region];
    auto& st = storage_[region];
    const std::size_t word = (addr - r.base) / 4;
    if (st.word_parity[word]) {
        const std::size_t off = word * 4;
        for (unsigned i = 0; i < 4 && off + i < st.bytes.size(); ++i) st.bytes[off + i] = st.golden[off + i];
        st.word_parity[word] = 0;
        res.cycles += config_.tcm_repair_stall_cycles;
        bump(&Counters::repairs);
        note(EventKind::Repair, r.base + static_cast<Address>(off), start_offset + res.cycles,
             config_.tcm_repair_stall_cycles, {{"memory", std::string("tcm")}});
    }
    res.cycles += r.access_cycles;
    res.value = *raw_read(region, addr, size);
    return res;
}

MemResult MemorySystem::read(Address addr, unsigned size) {
    MemResult res;
    auto idx = map_.find(addr);
    if (!idx || !map_.regions()[*idx].contains(addr, size)) {
        res.fault = MemFault::Bus;
        return res;
    }
    const auto& r = map_.regions()[*idx];
    switch (r.kind) {
    case RegionKind::BitbandAlias: {
        const auto loc = *map_.translate_bitband(addr);
        const auto target = *map_.find(loc.target_byte);
        const Word byte = *raw_read(target, loc.target_byte, 1);
        res.value = (byte >> loc.bit) & 1u;
        res.cycles = map_.regions()[target].access_cycles;
        return res;
    }
    case RegionKind::Device:
        if (device_) {
            auto a = device_->device_read(addr, size);
            if (a.handled) {
                res.value = a.value;
                res.cycles = r.access_cycles;
                if (a.fault) res.fault = MemFault::Bus;
                return res;
            }
        }
        res.value = *raw_read(*idx, addr, size);
        res.cycles = r.access_cycles;
        return res;
    case RegionKind::Tcm:
        return tcm_read(*idx, addr, size, 0);
    case RegionKind::Flash:
        if (r.cached && dcache_.enabled()) return cached_read(*idx, addr, size, 0);
        res.cycles = flash_.data_read(addr, size).cycles;
        res.value = *raw_read(*idx, addr, size);
        return res;
    case RegionKind::Ram:
    case RegionKind::BitbandTarget:
        if (r.cached && dcache_.enabled()) {
            res = cached_read(*idx, addr, size, 0);
            res.cycles += r.access_cycles;
            return res;
        }
        res.value = *raw_read(*idx, addr, size);
        res.cycles = r.access_cycles;
        return res;
    }
    res.fault = MemFault::Bus;
    return res;
}

MemResult MemorySystem::write(Address addr, unsigned size, Word value) {
    MemResult res;
    auto idx = map_.find(addr);
    if (!idx || !map_.regions()[*idx].contains(addr, size) || !map_.regions()[*idx].writable) {
        res.fault = MemFault::Bus;
        return res;
    }
    const auto& r = map_.regions()[*idx];
    switch (r.kind) {
    case RegionKind::BitbandAlias: {
        const auto loc = *map_.translate_bitband(addr);
        const auto target = *map_.find(loc.target_byte);
        const Word before = *raw_read(target, loc.target_byte, 1);
        const Word after = (before & ~(1u << loc.bit)) | ((value & 1u) << loc.bit);
        raw_write(target, loc.target_byte, 1, after);
        if (dcache_.enabled() && dcache_.holds(loc.target_byte)) {
            auto& line = dcache_.line(dcache_.index_of(loc.target_byte));
            const unsigned w = (loc.target_byte % kLineBytes) / 4;
            line.data[w] = merge_bytes(line.data[w], loc.target_byte % 4, 1, after);
        }
        res.cycles = map_.regions()[target].access_cycles;
        bump(&Counters::bitband_writes);
        note(EventKind::BitbandWrite, loc.target_byte, res.cycles, 0,
             {{"bit", std::int64_t{loc.bit}},
              {"value", std::int64_t{value & 1u}},
              {"before", std::int64_t{before}},
              {"after", std::int64_t{after}}});
        return res;
    }
    case RegionKind::Device:
        res.cycles = r.access_cycles;
        if (device_) {
            auto a = device_->device_write(addr, size, value);
            if (a.handled) {
                if (a.fault) res.fault = MemFault::Bus;
                return res;
            }
        }
        raw_write(*idx, addr, size, value);
        return res;
    case RegionKind::Tcm: {
        auto& st = storage_[*idx];
        const std::size_t word = (addr - r.base) / 4;
        if (st.word_parity[word] && size < 4) {
            // A partial write merges with the stored word, which must be repaired first.
            const std::size_t off = word * 4;
            for (unsigned i = 0; i < 4; ++i) st.bytes[off + i] = st.golden[off + i];
            res.cycles += config_.tcm_repair_stall_cycles;
            bump(&Counters::repairs);
            note(EventKind::Repair, r.base + static_cast<Address>(off), res.cycles, config_.tcm_repair_stall_cycles,
                 {{"memory", std::string("tcm")}});
        }
        st.word_parity[word] = 0;
        raw_write(*idx, addr, size, value);
        res.cycles += r.access_cycles;
        return res;
    }
    case RegionKind::Flash:
    case RegionKind::Ram:
    case RegionKind::BitbandTarget: {
        raw_write(*idx, addr, size, value);
        if (dcache_.enabled() && r.cached && dcache_.holds(addr)) {
            auto& line = dcache_.line(dcache_.index_of(addr));
            const unsigned w = (addr % kLineBytes) / 4;
            line.data[w] = merge_bytes(line.data[w], addr % 4, size, value);
            if (size == 4) line.word_parity &= static_cast<std::uint8_t>(~(1u << w));
        }
        res.cycles = r.access_cycles;
        return res;
    }
    }
    res.fault = MemFault::Bus;
    return res;
}

// -------------------------------------------------------- instruction side

std::uint16_t MemorySystem::icache_halfword(Address addr, Cycles& cycles) {
    const unsigned index = icache_.index_of(addr);
    const std::uint32_t tag = icache_.tag_of(addr);
    CacheLine& line = icache_.line(index);
    const Address line_addr = Cache::line_base(addr);
    const unsigned word = (addr % kLineBytes) / 4;

    bool refill = false;
    if (line.valid && line.tag_parity) {
        bump(&Counters::icache_tag_errors);
        note(EventKind::Miss, line_addr, cycles, 0, {{"cache", std::string("icache")}, {"reason", std::string("tag_parity")}});
        refill = true;
    } else if (line.valid && line.tag == tag) {
        // Instruction lines are checked as a whole on every access.
        if (line.word_parity != 0) {
            icache_.invalidate(index);
            bump(&Counters::icache_parity_invalidations);
            note(EventKind::Miss, line_addr, cycles, 0, {{"cache", std::string("icache")}, {"reason", std::string("data_parity")}});
            refill = true;
        } else {
            cycles += icache_.config().hit_cycles;
        }
    } else {
        note(EventKind::Miss, line_addr, cycles, 0, {{"cache", std::string("icache")}, {"reason", std::string("cold")}});
        refill = true;
    }
    if (refill) {
        bump(&Counters::icache_misses);
        std::array<Word, kLineWords> data{};
        for (unsigned i = 0; i < kLineWords; ++i) data[i] = line_word_from_backing(line_addr + 4 * i);
        icache_.fill(index, tag, data);
        cycles += icache_.config().fill_cycles_per_line;
        bump(&Counters::icache_fills);
        note(EventKind::Fill, line_addr, cycles, icache_.config().fill_cycles_per_line, {{"cache", std::string("icache")}});
    }
    const Word w = icache_.line(index).data[word];
    return static_cast<std::uint16_t>(w >> (8 * (addr & 2u)));
}

std::uint16_t MemorySystem::plain_halfword(std::size_t region, Address addr, Cycles& cycles) {
    const auto& r = map_.regions()[region];
    if (r.kind == RegionKind::Tcm) {
        auto res = tcm_read(region, addr, 2, cycles);
        // tcm_read adds access_cycles per call; the fetch path charges it once.
        cycles += res.cycles - r.access_cycles;
        return static_cast<std::uint16_t>(res.value);
    }
    return static_cast<std::uint16_t>(raw_read(region, addr, 2).value_or(0));
}

FetchResult MemorySystem::fetch(Address pc, bool honor_breakpoints) {
    FetchResult out;
    if (honor_breakpoints && fpb_.breakpoint_at(pc)) {
        out.breakpoint = true;
        return out;
    }
    auto idx = map_.find(pc);
    if (!idx) {
        out.fault = MemFault::Bus;
        return out;
    }
    const auto& r = map_.regions()[*idx];
    if (!r.executable || !r.has_storage() || r.kind == RegionKind::Device || !r.contains(pc, 2)) {
        out.fault = MemFault::Bus;
        return out;
    }
    const bool via_icache = r.cached && icache_.enabled();

    auto patched = [&](Address a, std::uint16_t hw) -> std::uint16_t {
        if (r.kind != RegionKind::Flash) return hw;
        if (const FpbEntry* e = fpb_.lookup(a); e && e->mode == FpbMode::Remap) {
            return static_cast<std::uint16_t>(e->remap_value >> (8 * (a & 2u)));
        }
        return hw;
    };
    auto one = [&](Address a, Cycles& cycles) -> std::uint16_t {
        const std::uint16_t hw = via_icache ? icache_halfword(a, cycles) : plain_halfword(*idx, a, cycles);
        return patched(a, hw);
    };

    Cycles cycles = 0;
    out.halfwords[0] = one(pc, cycles);
    out.count = isa::is_wide_prefix(out.halfwords[0]) ? 2 : 1;
    if (out.count == 2) {
        if (!r.contains(pc + 2, 2)) {
            out.fault = MemFault::Bus;
            return out;
        }
        out.halfwords[1] = one(pc + 2, cycles);
    }
    if (!via_icache) {
        if (r.kind == RegionKind::Flash) {
            const auto a = flash_.fetch(pc, 2 * out.count);
            cycles += a.cycles;
            out.nonsequential = a.nonsequential;
            if (a.nonsequential) {
                bump(&Counters::fetch_nonseq);
                note(EventKind::FetchNonseq, pc, cycles, 0, {{"cycles", static_cast<std::int64_t>(a.cycles)}});
            }
        } else {
            cycles += r.access_cycles;
        }
    } else if (r.kind == RegionKind::Flash) {
        // Line fills read flash out of band; the fetch stream restarts afterwards.
        flash_.reset();
    }
    out.cycles = cycles;
    return out;
}

// ------------------------------------------------------------ debug access

bool MemorySystem::load(Address addr, std::span<const std::uint8_t> bytes) {
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const Address a = addr + static_cast<Address>(i);
        auto idx = map_.find(a);
        if (!idx || !map_.regions()[*idx].has_storage()) return false;
        raw_write(*idx, a, 1, bytes[i]);
    }
    return true;
}

std::optional<Word> MemorySystem::peek(Address addr, unsigned size) const {
    auto idx = map_.find(addr);
    if (!idx) return std::nullopt;
    const auto& r = map_.regions()[*idx];
    if (r.kind == RegionKind::BitbandAlias) {
        const auto loc = *map_.translate_bitband(addr);
        auto b = raw_read(*map_.find(loc.target_byte), loc.target_byte, 1);
        if (!b) return std::nullopt;
        return (*b >> loc.bit) & 1u;
    }
    return raw_read(*idx, addr, size);
}

bool MemorySystem::poke(Address addr, unsigned size, Word value) {
    auto idx = map_.find(addr);
    if (!idx || !map_.regions()[*idx].has_storage() || !map_.regions()[*idx].contains(addr, size)) return false;
    raw_write(*idx, addr, size, value);
    return true;
}

void MemorySystem::fpb_configure(unsigned entry, const FpbEntry& config) {
    const auto* r = map_.region_at(config.match_address);
    if (!r || r->kind != RegionKind::Flash || !r->contains(config.match_address, 4)) {
        throw ConfigError("FPB match address is not a flash word");
    }
    if (entry < kFpbEntries && !fpb_.entry(entry) && fpb_.enabled_count() >= kFpbEntries) {
        throw ConfigError("FPB already has eight enabled entries");
    }
    fpb_.configure(entry, config);
}

// ----------------------------------------------------------- soft errors

InjectOutcome MemorySystem::inject(const SoftErrorInjection& inj) {
    InjectOutcome out;
    auto warn = [&](std::string msg) {
        out.warning = std::move(msg);
        bump(&Counters::warnings);
        return out;
    };

    if (inj.target == SoftErrorTarget::Tcm) {
        std::optional<std::size_t> idx;
        if (inj.tcm_region.empty()) {
            for (std::size_t i = 0; i < map_.regions().size(); ++i) {
                if (map_.regions()[i].kind == RegionKind::Tcm) {
                    idx = i;
                    break;
                }
            }
        } else {
            idx = map_.index_of(inj.tcm_region);
            if (idx && map_.regions()[*idx].kind != RegionKind::Tcm) idx.reset();
        }
        if (!idx) return warn("no TCM region to inject into");
        auto& st = storage_[*idx];
        if (inj.word >= st.word_parity.size()) return warn("TCM word index out of range");
        const std::size_t byte = inj.word * 4 + (inj.bit % 32) / 8;
        st.bytes[byte] ^= static_cast<std::uint8_t>(1u << (inj.bit % 8));
        st.word_parity[inj.word] = 1;
        out.applied = true;
        out.address = map_.regions()[*idx].base + inj.word * 4;
        bump(&Counters::soft_errors_injected);
        return out;
    }

    const bool icache = inj.target == SoftErrorTarget::IcacheData || inj.target == SoftErrorTarget::IcacheTag;
    Cache& cache = icache ? icache_ : dcache_;
    if (!cache.enabled()) return warn(std::string(icache ? "icache" : "dcache") + " is disabled");
    unsigned line_index = 0;
    if (inj.line) {
        line_index = *inj.line;
        if (line_index >= cache.line_count() || !cache.line(line_index).valid) {
            return warn("line " + std::to_string(line_index) + " is not valid");
        }
    } else {
        const auto valid = cache.valid_lines();
        if (valid.empty()) return warn("no valid cache line to inject into");
        line_index = valid[inj.pick % valid.size()];
    }
    CacheLine& line = cache.line(line_index);
    out.line = line_index;
    if (inj.target == SoftErrorTarget::IcacheData || inj.target == SoftErrorTarget::DcacheData) {
        const unsigned word = inj.word % kLineWords;
        line.data[word] ^= 1u << (inj.bit % 32);
        line.word_parity |= static_cast<std::uint8_t>(1u << word);
        out.address = cache.address_of(line_index, line.tag) + 4 * word;
    } else {
        const unsigned index_bits = static_cast<unsigned>(std::countr_zero(cache.line_count() * kLineBytes));
        const unsigned tag_bits = index_bits >= 32 ? 1 : 32 - index_bits;
        out.address = cache.address_of(line_index, line.tag);
        line.tag ^= 1u << (inj.bit % tag_bits);
        line.tag_parity = true;
    }
    out.applied = true;
    bump(&Counters::soft_errors_injected);
    return out;
}

} // namespace t2sim::memory
