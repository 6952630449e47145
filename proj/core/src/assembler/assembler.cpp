#include "t2sim/assembler/assembler.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <unordered_map>

#include "t2sim/isa/encoding.hpp"

namespace t2sim::assembler {

using isa::CondCode;
using isa::Form;
using isa::Instruction;
using isa::Opcode;

std::string_view to_string(LoadMode m) {
    return m == LoadMode::Pool ? "pool" : "movw";
}

std::optional<LoadMode> parse_load_mode(std::string_view text) {
    if (text == "pool") return LoadMode::Pool;
    if (text == "movw") return LoadMode::Movw;
    return std::nullopt;
}

std::uint64_t ProgramImage::size_bytes() const {
    std::uint64_t n = 0;
    for (const auto& s : segments) n += s.bytes.size();
    return n;
}

std::optional<Address> ProgramImage::symbol(std::string_view name) const {
    auto it = symbols.find(std::string(name));
    if (it == symbols.end()) return std::nullopt;
    return it->second;
}

namespace {

// A number, a symbol, or symbol +/- number.
struct Expr {
    std::string symbol;
    std::int64_t offset = 0;

    std::string key() const {
        if (symbol.empty()) return std::to_string(offset);
        if (offset == 0) return symbol;
        return symbol + (offset > 0 ? "+" : "") + std::to_string(offset);
    }
};

enum class ItemKind : std::uint8_t { Insn, Words, Space, Align, Org, Pool, Table };

struct Item {
    ItemKind kind = ItemKind::Insn;
    unsigned line = 0;

    Instruction insn;
    bool relaxable = false;
    bool wide = false;
    std::optional<Expr> branch;        // B/BL target
    std::optional<std::size_t> pool;   // pool-mode literal: index of the Pool item
    std::size_t pool_entry = 0;
    std::optional<Expr> literal_label; // `ldr rd, label`
    std::optional<Expr> half_expr;     // MOVW/MOVH of a symbolic constant
    bool high_half = false;
    std::optional<std::string> target_name;

    std::vector<Expr> values;          // Words entries, Pool entries, Table labels
    std::uint64_t amount = 0;          // Space bytes, Align boundary, Org address

    // layout
    Address addr = 0;
    std::uint32_t pad = 0;
    std::uint32_t size = 0;
    Address start() const { return addr + pad; }
};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}
bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}

std::optional<std::int64_t> parse_number(std::string_view s) {
    s = trim(s);
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    if (s.empty()) return std::nullopt;
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    } else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) {
        base = 2;
        s.remove_prefix(2);
    }
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc{} || p != s.data() + s.size() || v > 0xFFFFFFFFull) return std::nullopt;
    return neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
}

std::vector<std::string> split_operands(std::string_view s) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '[' || c == '{') ++depth;
        if (c == ']' || c == '}') --depth;
        if (c == ',' && depth == 0) {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.emplace_back(trim(cur));
    return out;
}

struct BaseMnemonic {
    std::string_view name;
    Opcode op;
    bool s_ok;
};

// Longest first so that prefixes resolve to the longest legal mnemonic.
constexpr std::array<BaseMnemonic, 29> kBases = {{
    {"movw", Opcode::MOVW, false}, {"movh", Opcode::MOVH, false}, {"ubfx", Opcode::UBFX, false},
    {"udiv", Opcode::UDIV, false}, {"sdiv", Opcode::SDIV, false}, {"rbit", Opcode::RBIT, false},
    {"ldrb", Opcode::LDRB, false}, {"strb", Opcode::STRB, false}, {"ldrh", Opcode::LDRH, false},
    {"strh", Opcode::STRH, false}, {"halt", Opcode::HALT, false}, {"mov", Opcode::MOV, true},
    {"add", Opcode::ADD, true},    {"sub", Opcode::SUB, true},    {"and", Opcode::AND, true},
    {"orr", Opcode::ORR, true},    {"eor", Opcode::EOR, true},    {"lsl", Opcode::LSL, true},
    {"lsr", Opcode::LSR, true},    {"cmp", Opcode::CMP, false},   {"bfi", Opcode::BFI, false},
    {"bfc", Opcode::BFC, false},   {"ldr", Opcode::LDR, false},   {"str", Opcode::STR, false},
    {"ldm", Opcode::LDM, false},   {"stm", Opcode::STM, false},   {"nop", Opcode::NOP, false},
    {"bl", Opcode::BL, false},     {"b", Opcode::B, false},
}};

struct Mnemonic {
    Opcode op = Opcode::NOP;
    bool set_flags = false;
    std::optional<CondCode> cond; // explicit suffix
    bool bx = false;
    bool tb = false;
    std::string it_pattern; // "t", "te", ... for IT
};

std::optional<Mnemonic> decompose(const std::string& m) {
    Mnemonic out;
    if (m == "bx") {
        out.bx = true;
        return out;
    }
    if (m == "tb") {
        out.tb = true;
        out.op = Opcode::TB;
        return out;
    }
    if (m.size() >= 2 && m.size() <= 5 && m[0] == 'i' && m[1] == 't' &&
        m.find_first_not_of("te", 1) == std::string::npos) {
        out.op = Opcode::IT;
        out.it_pattern = m.substr(1);
        return out;
    }
    for (const auto& b : kBases) {
        if (m.compare(0, b.name.size(), b.name) != 0) continue;
        std::string_view rest = std::string_view(m).substr(b.name.size());
        bool s = false;
        if (b.s_ok && !rest.empty() && rest.front() == 's' && (rest.size() == 1 || isa::parse_cond(rest.substr(1)))) {
            s = true;
            rest.remove_prefix(1);
        }
        std::optional<CondCode> cond;
        if (!rest.empty()) {
            cond = isa::parse_cond(rest);
            if (!cond) continue;
        }
        out.op = b.op;
        out.set_flags = s;
        out.cond = cond;
        return out;
    }
    return std::nullopt;
}

class Assembler {
public:
    Assembler(std::string_view source, const AsmOptions& options) : options_(options) { split_lines(source); }

    ProgramImage run() {
        mode_ = resolve_mode();
        for (unsigned n = 0; n < lines_.size(); ++n) parse_line(n + 1, lines_[n]);
        if (pending_tb_) throw AsmError(pending_tb_->line, "tb must be followed by a .table directive");
        if (it_remaining_ > 0) throw AsmError(it_line_, "IT block is not closed before the end of the source");
        flush_pool(static_cast<unsigned>(lines_.size()));

        check_references();

        bool changed = true;
        for (int pass = 0; changed; ++pass) {
            if (pass > 64) throw AsmError(0, "width relaxation did not converge");
            layout();
            changed = relax();
        }
        return emit();
    }

private:
    struct PendingTb {
        unsigned line;
        std::uint8_t rn;
        Expr default_label;
    };

    void split_lines(std::string_view src) {
        std::size_t pos = 0;
        while (pos <= src.size()) {
            auto nl = src.find('\n', pos);
            if (nl == std::string_view::npos) nl = src.size();
            std::string_view line = src.substr(pos, nl - pos);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines_.emplace_back(line);
            pos = nl + 1;
        }
    }

    static std::string_view strip_comment(std::string_view s) {
        auto c = s.find(';');
        return c == std::string_view::npos ? s : s.substr(0, c);
    }

    LoadMode resolve_mode() {
        std::optional<LoadMode> declared;
        unsigned declared_line = 0;
        for (unsigned n = 0; n < lines_.size(); ++n) {
            auto s = trim(strip_comment(lines_[n]));
            if (s.size() < 5 || lower(s.substr(0, 5)) != ".mode") continue;
            if (s.size() > 5 && !std::isspace(static_cast<unsigned char>(s[5]))) continue;
            auto m = parse_load_mode(lower(trim(s.substr(5))));
            if (!m) throw AsmError(n + 1, ".mode expects pool or movw");
            if (declared && *declared != *m) {
                throw AsmError(n + 1, ".mode conflicts with the .mode on line " + std::to_string(declared_line));
            }
            declared = m;
            declared_line = n + 1;
        }
        if (options_.mode) return *options_.mode;
        return declared.value_or(LoadMode::Pool);
    }

    // ------------------------------------------------------------ parsing

    void parse_line(unsigned line, std::string_view raw) {
        std::string_view s = trim(strip_comment(raw));
        // Leading labels.
        while (!s.empty() && is_ident_start(s.front())) {
            std::size_t i = 1;
            while (i < s.size() && is_ident_char(s[i])) ++i;
            if (i < s.size() && s[i] == ':') {
                define_label(line, std::string(s.substr(0, i)));
                s = trim(s.substr(i + 1));
            } else {
                break;
            }
        }
        if (s.empty()) return;

        std::size_t sp = 0;
        while (sp < s.size() && !std::isspace(static_cast<unsigned char>(s[sp]))) ++sp;
        const std::string head = lower(s.substr(0, sp));
        const std::string_view rest = trim(s.substr(sp));

        if (pending_tb_ && head != ".table") {
            throw AsmError(pending_tb_->line, "tb must be followed immediately by a .table directive");
        }
        if (head.front() == '.') {
            if (it_remaining_ > 0) throw AsmError(line, "directives are not allowed inside an IT block");
            parse_directive(line, head, rest);
            return;
        }
        parse_instruction(line, head, rest);
    }

    void define_label(unsigned line, const std::string& name) {
        if (label_items_.count(name)) throw AsmError(line, "duplicate label '" + name + "'");
        label_items_[name] = items_.size();
        label_lines_[name] = line;
    }

    void parse_directive(unsigned line, const std::string& head, std::string_view rest) {
        if (head == ".mode") return; // handled up front
        if (head == ".org") {
            auto v = parse_number(rest);
            if (!v || *v < 0) throw AsmError(line, ".org expects a non-negative address");
            Item it;
            it.kind = ItemKind::Org;
            it.line = line;
            it.amount = static_cast<std::uint64_t>(*v);
            items_.push_back(std::move(it));
            return;
        }
        if (head == ".word") {
            Item it;
            it.kind = ItemKind::Words;
            it.line = line;
            for (const auto& op : split_operands(rest)) it.values.push_back(parse_expr(line, op));
            if (it.values.empty()) throw AsmError(line, ".word needs at least one value");
            items_.push_back(std::move(it));
            return;
        }
        if (head == ".space" || head == ".align") {
            auto v = parse_number(rest);
            if (!v || *v < 0) throw AsmError(line, head + " expects a non-negative number");
            if (head == ".align" && (*v == 0 || (*v & (*v - 1)) != 0)) {
                throw AsmError(line, ".align expects a power of two");
            }
            Item it;
            it.kind = head == ".space" ? ItemKind::Space : ItemKind::Align;
            it.line = line;
            it.amount = static_cast<std::uint64_t>(*v);
            items_.push_back(std::move(it));
            return;
        }
        if (head == ".pool") {
            flush_pool(line);
            return;
        }
        if (head == ".table") {
            if (!pending_tb_) throw AsmError(line, ".table must directly follow a tb instruction");
            std::vector<Expr> labels;
            for (const auto& op : split_operands(rest)) labels.push_back(parse_label_expr(line, op));
            if (labels.empty()) throw AsmError(line, ".table needs at least one label");
            emit_table_dispatch(line, labels);
            return;
        }
        throw AsmError(line, "unknown directive '" + head + "'");
    }

    Expr parse_expr(unsigned line, std::string_view text) {
        text = trim(text);
        if (auto n = parse_number(text)) return Expr{"", *n};
        return parse_label_expr(line, text);
    }

    Expr parse_label_expr(unsigned line, std::string_view text) {
        text = trim(text);
        if (text.empty() || !is_ident_start(text.front())) throw AsmError(line, "expected a label, got '" + std::string(text) + "'");
        std::size_t i = 1;
        while (i < text.size() && is_ident_char(text[i])) ++i;
        Expr e{std::string(text.substr(0, i)), 0};
        auto tail = trim(text.substr(i));
        if (!tail.empty()) {
            if (tail.front() != '+' && tail.front() != '-') throw AsmError(line, "malformed expression '" + std::string(text) + "'");
            auto n = parse_number(tail);
            if (!n) throw AsmError(line, "malformed expression '" + std::string(text) + "'");
            e.offset = *n;
        }
        return e;
    }

    static std::optional<std::uint8_t> parse_reg(std::string_view text) {
        const std::string t = lower(trim(text));
        if (t == "sp") return kSP;
        if (t == "lr") return kLR;
        if (t == "pc") return kPC;
        if (t.size() < 2 || t.size() > 3 || t[0] != 'r') return std::nullopt;
        auto n = parse_number(t.substr(1));
        if (!n || *n < 0 || *n > 15 || (t.size() == 3 && t[1] == '0')) return std::nullopt;
        return static_cast<std::uint8_t>(*n);
    }

    std::uint8_t reg(unsigned line, std::string_view text) {
        auto r = parse_reg(text);
        if (!r) throw AsmError(line, "expected a register, got '" + std::string(trim(text)) + "'");
        return *r;
    }

    std::int64_t imm(unsigned line, std::string_view text) {
        text = trim(text);
        if (text.empty() || text.front() != '#') throw AsmError(line, "expected an immediate '#n', got '" + std::string(text) + "'");
        auto n = parse_number(text.substr(1));
        if (!n) throw AsmError(line, "malformed immediate '" + std::string(text) + "'");
        return *n;
    }

    static bool is_imm(std::string_view text) {
        text = trim(text);
        return !text.empty() && text.front() == '#';
    }

    std::uint16_t reglist(unsigned line, std::string_view text) {
        text = trim(text);
        if (text.size() < 2 || text.front() != '{' || text.back() != '}') throw AsmError(line, "expected a register list '{...}'");
        std::uint16_t mask = 0;
        for (const auto& part : split_operands(text.substr(1, text.size() - 2))) {
            auto dash = part.find('-');
            if (dash == std::string::npos) {
                mask |= static_cast<std::uint16_t>(1u << reg(line, part));
                continue;
            }
            const unsigned lo = reg(line, std::string_view(part).substr(0, dash));
            const unsigned hi = reg(line, std::string_view(part).substr(dash + 1));
            if (lo > hi) throw AsmError(line, "register range '" + part + "' is descending");
            for (unsigned r = lo; r <= hi; ++r) mask |= static_cast<std::uint16_t>(1u << r);
        }
        if (mask == 0) throw AsmError(line, "register list is empty");
        return mask;
    }

    void expect_count(unsigned line, const std::vector<std::string>& ops, std::size_t lo, std::size_t hi,
                      const std::string& what) {
        if (ops.size() < lo || ops.size() > hi) throw AsmError(line, "wrong number of operands for " + what);
    }

    static Instruction make(Opcode op, Form form) {
        Instruction i;
        i.op = op;
        i.form = form;
        return i;
    }

    void push_insn(unsigned line, Instruction insn) {
        Item it;
        it.kind = ItemKind::Insn;
        it.line = line;
        set_fixed_width(line, insn);
        it.insn = insn;
        it.wide = insn.width_bits == 32;
        items_.push_back(std::move(it));
    }

    static void set_fixed_width(unsigned line, Instruction& insn) {
        if (isa::fits_narrow(insn)) {
            insn.width_bits = 16;
        } else if (isa::fits_wide(insn)) {
            insn.width_bits = 32;
        } else {
            throw AsmError(line, "operands out of range for '" + isa::disassemble(insn) + "'");
        }
    }

    // IT bookkeeping: returns the slot condition when inside a block.
    std::optional<CondCode> consume_it_slot(unsigned line, const Mnemonic& m, bool is_branch, bool expands) {
        if (it_remaining_ == 0) {
            if (m.cond && *m.cond != CondCode::AL && !(is_branch && m.op == Opcode::B)) {
                throw AsmError(line, "conditional instruction outside an IT block");
            }
            return std::nullopt;
        }
        const unsigned slot = it_count_ - it_remaining_;
        const bool else_slot = (it_else_ >> slot) & 1u;
        const CondCode slot_cond = else_slot ? isa::invert(it_cond_) : it_cond_;
        if (m.cond && *m.cond != slot_cond) {
            throw AsmError(line, "condition suffix does not match the IT block slot (expected " +
                                     std::string(isa::to_string(slot_cond)) + ")");
        }
        if (m.op == Opcode::IT) throw AsmError(line, "IT blocks cannot be nested");
        if (expands) throw AsmError(line, "this instruction expands to several instructions and cannot be predicated");
        if (is_branch && it_remaining_ != 1) throw AsmError(line, "a branch is only allowed in the last slot of an IT block");
        --it_remaining_;
        return slot_cond;
    }

    void parse_instruction(unsigned line, const std::string& head, std::string_view rest) {
        auto m = decompose(head);
        if (!m) throw AsmError(line, "unknown mnemonic '" + head + "'");
        const auto ops = split_operands(rest);

        if (m->bx) {
            expect_count(line, ops, 1, 1, "bx");
            consume_it_slot(line, *m, true, false);
            auto i = make(Opcode::MOV, Form::Reg);
            i.rd = kPC;
            i.rm = reg(line, ops[0]);
            push_insn(line, i);
            return;
        }
        if (m->tb) {
            expect_count(line, ops, 2, 2, "tb");
            consume_it_slot(line, *m, true, true);
            pending_tb_ = PendingTb{line, reg(line, ops[0]), parse_label_expr(line, ops[1])};
            return;
        }

        switch (m->op) {
        case Opcode::IT: {
            expect_count(line, ops, 1, 1, "it");
            if (it_remaining_ > 0) throw AsmError(line, "IT blocks cannot be nested");
            auto c = isa::parse_cond(lower(ops[0]));
            if (!c) throw AsmError(line, "IT needs a condition code");
            const auto& pat = m->it_pattern;
            std::uint8_t else_bits = 0;
            for (std::size_t k = 0; k < pat.size(); ++k) {
                if (pat[k] == 'e') else_bits = static_cast<std::uint8_t>(else_bits | (1u << k));
            }
            if (*c == CondCode::AL && else_bits) throw AsmError(line, "an IT AL block cannot have else slots");
            auto i = make(Opcode::IT, Form::It);
            i.cond = *c;
            i.it_count = static_cast<std::uint8_t>(pat.size());
            i.it_else = else_bits;
            push_insn(line, i);
            it_remaining_ = it_count_ = static_cast<unsigned>(pat.size());
            it_else_ = else_bits;
            it_cond_ = *c;
            it_line_ = line;
            return;
        }
        case Opcode::NOP:
        case Opcode::HALT:
            expect_count(line, ops, 0, 0, head);
            consume_it_slot(line, *m, false, false);
            push_insn(line, make(m->op, Form::None));
            return;
        case Opcode::B:
        case Opcode::BL: {
            expect_count(line, ops, 1, 1, head);
            const auto slot = consume_it_slot(line, *m, true, false);
            auto i = make(m->op, Form::Branch);
            i.cond = slot ? CondCode::AL : m->cond.value_or(CondCode::AL);
            if (m->op == Opcode::BL && i.cond != CondCode::AL) throw AsmError(line, "bl cannot be conditional outside an IT block");
            Item it;
            it.kind = ItemKind::Insn;
            it.line = line;
            it.insn = i;
            it.insn.width_bits = m->op == Opcode::BL ? 32 : 16;
            it.wide = m->op == Opcode::BL;
            it.relaxable = m->op == Opcode::B;
            it.branch = parse_label_expr(line, ops[0]);
            it.target_name = it.branch->key();
            items_.push_back(std::move(it));
            return;
        }
        default:
            break;
        }

        const bool load_const = (m->op == Opcode::LDR && ops.size() == 2 && !trim(ops[1]).empty() && trim(ops[1]).front() == '=');
        consume_it_slot(line, *m, false, load_const);

        switch (m->op) {
        case Opcode::MOV: {
            expect_count(line, ops, 2, 2, head);
            auto i = make(Opcode::MOV, is_imm(ops[1]) ? Form::Imm : Form::Reg);
            i.set_flags = m->set_flags;
            i.rd = reg(line, ops[0]);
            if (i.form == Form::Imm) {
                const auto v = imm(line, ops[1]);
                if (v < 0 || v > 0xFFF) throw AsmError(line, "mov immediate must be 0..4095; use movw/movh or ldr rd, =value");
                i.imm = static_cast<std::uint32_t>(v);
            } else {
                i.rm = reg(line, ops[1]);
            }
            push_insn(line, i);
            return;
        }
        case Opcode::MOVW:
        case Opcode::MOVH: {
            expect_count(line, ops, 2, 2, head);
            auto i = make(m->op, Form::Imm);
            i.rd = reg(line, ops[0]);
            const auto v = imm(line, ops[1]);
            if (v < 0 || v > 0xFFFF) throw AsmError(line, head + " immediate must be 0..65535");
            i.imm = static_cast<std::uint32_t>(v);
            push_insn(line, i);
            return;
        }
        case Opcode::ADD:
        case Opcode::SUB:
        case Opcode::AND:
        case Opcode::ORR:
        case Opcode::EOR:
        case Opcode::LSL:
        case Opcode::LSR: {
            expect_count(line, ops, 2, 3, head);
            const std::uint8_t rd = reg(line, ops[0]);
            const std::uint8_t rn = ops.size() == 3 ? reg(line, ops[1]) : rd;
            const std::string& last = ops.back();
            auto i = make(m->op, is_imm(last) ? Form::RegImm : Form::RegReg);
            i.set_flags = m->set_flags;
            i.rd = rd;
            i.rn = rn;
            if (i.form == Form::RegImm) {
                auto v = imm(line, last);
                if ((i.op == Opcode::ADD || i.op == Opcode::SUB) && v < 0) {
                    i.op = i.op == Opcode::ADD ? Opcode::SUB : Opcode::ADD;
                    v = -v;
                }
                const std::int64_t max = (i.op == Opcode::LSL || i.op == Opcode::LSR) ? 31 : 0xFFF;
                if (v < 0 || v > max) throw AsmError(line, head + " immediate out of range 0.." + std::to_string(max));
                i.imm = static_cast<std::uint32_t>(v);
            } else {
                i.rm = reg(line, last);
            }
            push_insn(line, i);
            return;
        }
        case Opcode::CMP: {
            expect_count(line, ops, 2, 2, head);
            auto i = make(Opcode::CMP, is_imm(ops[1]) ? Form::Imm : Form::Reg);
            i.set_flags = true;
            i.rn = reg(line, ops[0]);
            if (i.form == Form::Imm) {
                const auto v = imm(line, ops[1]);
                if (v < 0 || v > 0xFFF) throw AsmError(line, "cmp immediate must be 0..4095");
                i.imm = static_cast<std::uint32_t>(v);
            } else {
                i.rm = reg(line, ops[1]);
            }
            push_insn(line, i);
            return;
        }
        case Opcode::UDIV:
        case Opcode::SDIV: {
            expect_count(line, ops, 3, 3, head);
            auto i = make(m->op, Form::RegReg);
            i.rd = reg(line, ops[0]);
            i.rn = reg(line, ops[1]);
            i.rm = reg(line, ops[2]);
            push_insn(line, i);
            return;
        }
        case Opcode::RBIT: {
            expect_count(line, ops, 2, 2, head);
            auto i = make(Opcode::RBIT, Form::Reg);
            i.rd = reg(line, ops[0]);
            i.rm = reg(line, ops[1]);
            push_insn(line, i);
            return;
        }
        case Opcode::BFI:
        case Opcode::BFC:
        case Opcode::UBFX: {
            const bool has_rn = m->op != Opcode::BFC;
            expect_count(line, ops, has_rn ? 4 : 3, has_rn ? 4 : 3, head);
            auto i = make(m->op, Form::Bitfield);
            i.rd = reg(line, ops[0]);
            if (has_rn) i.rn = reg(line, ops[1]);
            const auto lsb = imm(line, ops[has_rn ? 2 : 1]);
            const auto width = imm(line, ops[has_rn ? 3 : 2]);
            if (lsb < 0 || lsb > 31 || width < 1 || lsb + width > 32) {
                throw AsmError(line, head + " needs 0 <= lsb, 1 <= width and lsb + width <= 32");
            }
            i.lsb = static_cast<std::uint8_t>(lsb);
            i.width = static_cast<std::uint8_t>(width);
            push_insn(line, i);
            return;
        }
        case Opcode::LDR:
        case Opcode::STR:
        case Opcode::LDRB:
        case Opcode::STRB:
        case Opcode::LDRH:
        case Opcode::STRH:
            parse_memory(line, *m, head, ops);
            return;
        case Opcode::LDM:
        case Opcode::STM: {
            expect_count(line, ops, 2, 2, head);
            std::string base = std::string(trim(ops[0]));
            const bool wb = !base.empty() && base.back() == '!';
            if (wb) base.pop_back();
            auto i = make(m->op, Form::Multi);
            i.rn = reg(line, base);
            i.reglist = reglist(line, ops[1]);
            i.writeback = wb;
            if (wb && m->op == Opcode::LDM && ((i.reglist >> i.rn) & 1u)) {
                throw AsmError(line, "ldm with writeback cannot load its own base register");
            }
            push_insn(line, i);
            return;
        }
        default:
            throw AsmError(line, "unsupported mnemonic '" + head + "'");
        }
    }

    void parse_memory(unsigned line, const Mnemonic& m, const std::string& head, const std::vector<std::string>& ops) {
        expect_count(line, ops, 2, 2, head);
        const std::uint8_t rt = reg(line, ops[0]);
        const std::string_view addr = trim(ops[1]);
        if (addr.front() == '=') {
            if (m.op != Opcode::LDR) throw AsmError(line, "only ldr accepts an =constant operand");
            lower_constant(line, rt, parse_expr(line, addr.substr(1)));
            return;
        }
        if (addr.front() != '[') {
            if (m.op != Opcode::LDR) throw AsmError(line, head + " needs a [base, offset] operand");
            Item it;
            it.kind = ItemKind::Insn;
            it.line = line;
            it.insn = make(Opcode::LDR, Form::Literal);
            it.insn.rd = rt;
            it.relaxable = true;
            it.literal_label = parse_label_expr(line, addr);
            it.target_name = it.literal_label->key();
            items_.push_back(std::move(it));
            return;
        }
        if (addr.back() != ']') throw AsmError(line, "unterminated address operand");
        const auto parts = split_operands(addr.substr(1, addr.size() - 2));
        if (parts.empty() || parts.size() > 2) throw AsmError(line, "address operand must be [rn], [rn, #imm] or [rn, rm]");
        auto i = make(m.op, Form::MemImm);
        i.rd = rt;
        i.rn = reg(line, parts[0]);
        if (parts.size() == 2) {
            if (is_imm(parts[1])) {
                const auto v = imm(line, parts[1]);
                if (v < 0 || v > 0xFFF) throw AsmError(line, "memory offset must be 0..4095");
                i.imm = static_cast<std::uint32_t>(v);
            } else {
                i.form = Form::MemReg;
                i.rm = reg(line, parts[1]);
            }
        }
        push_insn(line, i);
    }

    void lower_constant(unsigned line, std::uint8_t rd, const Expr& value) {
        if (mode_ == LoadMode::Movw) {
            for (bool high : {false, true}) {
                Item it;
                it.kind = ItemKind::Insn;
                it.line = line;
                it.insn = make(high ? Opcode::MOVH : Opcode::MOVW, Form::Imm);
                it.insn.rd = rd;
                it.insn.width_bits = 32;
                it.wide = true;
                it.half_expr = value;
                it.high_half = high;
                items_.push_back(std::move(it));
            }
            return;
        }
        const std::string key = value.key();
        auto found = pending_index_.find(key);
        std::size_t entry = 0;
        if (found == pending_index_.end()) {
            entry = pending_values_.size();
            pending_values_.push_back(value);
            pending_index_[key] = entry;
        } else {
            entry = found->second;
        }
        Item it;
        it.kind = ItemKind::Insn;
        it.line = line;
        it.insn = make(Opcode::LDR, Form::Literal);
        it.insn.rd = rd;
        it.relaxable = true;
        it.pool_entry = entry;
        pending_loads_.push_back(items_.size());
        items_.push_back(std::move(it));
    }

    void flush_pool(unsigned line) {
        Item pool;
        pool.kind = ItemKind::Pool;
        pool.line = line;
        pool.values = std::move(pending_values_);
        const std::size_t index = items_.size();
        for (auto li : pending_loads_) items_[li].pool = index;
        items_.push_back(std::move(pool));
        pending_values_.clear();
        pending_index_.clear();
        pending_loads_.clear();
    }

    void emit_table_dispatch(unsigned line, const std::vector<Expr>& labels) {
        const PendingTb tb = *pending_tb_;
        pending_tb_.reset();
        const auto n = static_cast<std::uint32_t>(labels.size());
        if (n > 0xFFF) throw AsmError(line, "jump table has more than 4095 entries");

        auto cmp = make(Opcode::CMP, Form::Imm);
        cmp.set_flags = true;
        cmp.rn = tb.rn;
        cmp.imm = n;
        push_insn(tb.line, cmp);

        Item guard;
        guard.kind = ItemKind::Insn;
        guard.line = tb.line;
        guard.insn = make(Opcode::B, Form::Branch);
        guard.insn.cond = CondCode::CS;
        guard.relaxable = true;
        guard.branch = tb.default_label;
        guard.target_name = tb.default_label.key();
        items_.push_back(std::move(guard));

        auto t = make(Opcode::TB, Form::Table);
        t.rn = tb.rn;
        t.imm = n;
        push_insn(tb.line, t);

        Item table;
        table.kind = ItemKind::Table;
        table.line = line;
        table.values = labels;
        items_.push_back(std::move(table));
    }

    // ------------------------------------------------------------- layout

    void check_references() {
        auto check = [&](const Expr& e, unsigned line) {
            if (!e.symbol.empty() && !label_items_.count(e.symbol)) {
                throw AsmError(line, "undefined label '" + e.symbol + "'");
            }
        };
        for (const auto& it : items_) {
            if (it.branch) check(*it.branch, it.line);
            if (it.literal_label) check(*it.literal_label, it.line);
            if (it.half_expr) check(*it.half_expr, it.line);
            for (const auto& v : it.values) check(v, it.line);
        }
    }

    Address label_address(const std::string& name) const {
        const std::size_t idx = label_items_.at(name);
        return idx < items_.size() ? items_[idx].start() : end_address_;
    }

    Word value_of(const Expr& e) const {
        const std::int64_t base = e.symbol.empty() ? 0 : static_cast<std::int64_t>(label_address(e.symbol));
        return static_cast<Word>(base + e.offset);
    }

    void layout() {
        std::uint64_t addr = options_.origin;
        for (auto& it : items_) {
            it.pad = 0;
            it.size = 0;
            switch (it.kind) {
            case ItemKind::Insn:
                it.size = it.wide ? 4 : 2;
                break;
            case ItemKind::Words:
                it.pad = static_cast<std::uint32_t>((4 - addr % 4) % 4);
                it.size = static_cast<std::uint32_t>(4 * it.values.size());
                break;
            case ItemKind::Space:
                it.size = static_cast<std::uint32_t>(it.amount);
                break;
            case ItemKind::Align:
                it.pad = static_cast<std::uint32_t>((it.amount - addr % it.amount) % it.amount);
                break;
            case ItemKind::Org:
                addr = it.amount;
                break;
            case ItemKind::Pool:
                if (!it.values.empty()) {
                    it.pad = static_cast<std::uint32_t>((4 - addr % 4) % 4);
                    it.size = static_cast<std::uint32_t>(4 * it.values.size());
                }
                break;
            case ItemKind::Table:
                it.size = static_cast<std::uint32_t>(2 * it.values.size());
                break;
            }
            it.addr = static_cast<Address>(addr);
            addr += it.pad + it.size;
            if (addr > 0x100000000ull) throw AsmError(it.line, "image runs past the end of the address space");
        }
        end_address_ = static_cast<Address>(addr);
    }

    std::int64_t branch_offset(const Item& it) const {
        return static_cast<std::int64_t>(value_of(*it.branch)) - static_cast<std::int64_t>(it.addr);
    }

    std::int64_t literal_offset(const Item& it) const {
        const Address entry = it.pool ? items_[*it.pool].start() + 4 * static_cast<Address>(it.pool_entry)
                                      : value_of(*it.literal_label);
        return static_cast<std::int64_t>(entry) - static_cast<std::int64_t>((it.addr + 4) & ~Address{3});
    }

    bool relax() {
        bool changed = false;
        for (auto& it : items_) {
            if (it.kind != ItemKind::Insn || !it.relaxable || it.wide) continue;
            Instruction probe = it.insn;
            if (it.branch) {
                probe.offset = static_cast<std::int32_t>(branch_offset(it));
            } else {
                const auto off = literal_offset(it);
                probe.imm = off < 0 ? 0xFFFFFFFFu : static_cast<std::uint32_t>(off);
            }
            probe.width_bits = 16;
            if (!isa::fits_narrow(probe)) {
                it.wide = true;
                changed = true;
            }
        }
        return changed;
    }

    // ----------------------------------------------------------- emission

    ProgramImage emit() {
        ProgramImage img;
        img.mode = mode_;
        for (const auto& [name, idx] : label_items_) img.symbols[name] = label_address(name);

        Segment* seg = nullptr;
        auto new_segment = [&](Address base) {
            img.segments.push_back(Segment{base, {}});
            seg = &img.segments.back();
        };
        new_segment(options_.origin);
        auto put16 = [&](std::uint16_t v) {
            seg->bytes.push_back(static_cast<std::uint8_t>(v));
            seg->bytes.push_back(static_cast<std::uint8_t>(v >> 8));
        };
        auto put32 = [&](Word v) {
            put16(static_cast<std::uint16_t>(v));
            put16(static_cast<std::uint16_t>(v >> 16));
        };
        auto pad = [&](std::uint32_t n) { seg->bytes.insert(seg->bytes.end(), n, 0); };

        for (std::size_t idx = 0; idx < items_.size(); ++idx) {
            auto& it = items_[idx];
            switch (it.kind) {
            case ItemKind::Org:
                if (seg->bytes.empty()) {
                    seg->base = it.addr;
                } else {
                    new_segment(it.addr);
                }
                break;
            case ItemKind::Insn: {
                Instruction insn = finalize(it);
                isa::Encoded enc;
                try {
                    enc = isa::encode(insn);
                } catch (const isa::EncodeError& e) {
                    throw AsmError(it.line, e.what());
                }
                for (unsigned k = 0; k < enc.count; ++k) put16(enc.halfwords[k]);
                img.instructions.push_back({it.addr, insn, it.line, it.target_name});
                break;
            }
            case ItemKind::Words:
                pad(it.pad);
                for (const auto& v : it.values) put32(value_of(v));
                img.data_bytes += it.pad + it.size;
                break;
            case ItemKind::Space:
                pad(it.size);
                img.data_bytes += it.size;
                break;
            case ItemKind::Align:
                pad(it.pad);
                img.data_bytes += it.pad;
                break;
            case ItemKind::Pool: {
                if (it.values.empty()) break;
                pad(it.pad);
                LiteralPool pool{it.addr, it.pad + it.size, {}};
                for (std::size_t k = 0; k < it.values.size(); ++k) {
                    const Word v = value_of(it.values[k]);
                    put32(v);
                    pool.entries.push_back({it.start() + 4 * static_cast<Address>(k), v, it.values[k].key()});
                }
                img.pool_bytes += pool.bytes;
                img.pools.push_back(std::move(pool));
                break;
            }
            case ItemKind::Table: {
                const Address base = it.addr;
                for (const auto& label : it.values) {
                    const std::int64_t delta = static_cast<std::int64_t>(value_of(label)) - base;
                    if (delta < 0 || delta % 2 != 0 || delta / 2 > 0xFFFF) {
                        throw AsmError(it.line, "table target '" + label.key() +
                                                    "' must lie after the table, halfword aligned, within 128 KiB");
                    }
                    put16(static_cast<std::uint16_t>(delta / 2));
                }
                img.data_bytes += it.size;
                break;
            }
            }
        }

        img.segments.erase(std::remove_if(img.segments.begin(), img.segments.end(),
                                          [](const Segment& s) { return s.bytes.empty(); }),
                           img.segments.end());
        auto sorted = img.segments;
        std::sort(sorted.begin(), sorted.end(), [](const Segment& a, const Segment& b) { return a.base < b.base; });
        for (std::size_t k = 1; k < sorted.size(); ++k) {
            if (sorted[k - 1].end() > sorted[k].base) {
                throw AsmError(0, ".org segments overlap at address " + std::to_string(sorted[k].base));
            }
        }

        if (auto s = img.symbols.find("start"); s != img.symbols.end()) {
            img.entry = s->second;
        } else if (!img.instructions.empty()) {
            img.entry = img.instructions.front().address;
        } else {
            img.entry = options_.origin;
        }
        return img;
    }

    Instruction finalize(const Item& it) const {
        Instruction insn = it.insn;
        insn.width_bits = it.wide ? 32 : 16;
        if (it.branch) {
            const auto off = branch_offset(it);
            if (off % 2 != 0) throw AsmError(it.line, "branch target is not halfword aligned");
            if (insn.op == Opcode::B && (off < -options_.wide_branch_range || off >= options_.wide_branch_range)) {
                throw AsmError(it.line, "branch target '" + it.branch->key() + "' is out of range");
            }
            insn.offset = static_cast<std::int32_t>(off);
        }
        if (it.pool || it.literal_label) {
            const auto off = literal_offset(it);
            if (off < 0) throw AsmError(it.line, "literal '" + it.target_name.value_or("") + "' must follow the load");
            if (off % 4 != 0) throw AsmError(it.line, "literal is not word aligned");
            if (off >= static_cast<std::int64_t>(options_.pool_reach) || off > 0xFFF) {
                throw AsmError(it.line, "literal pool is out of reach (" + std::to_string(off) +
                                            " bytes); insert a .pool directive closer to this load");
            }
            insn.imm = static_cast<std::uint32_t>(off);
        }
        if (it.half_expr) {
            const Word v = value_of(*it.half_expr);
            insn.imm = it.high_half ? (v >> 16) : (v & 0xFFFFu);
        }
        return insn;
    }

    AsmOptions options_;
    LoadMode mode_ = LoadMode::Pool;
    std::vector<std::string> lines_;
    std::vector<Item> items_;
    std::unordered_map<std::string, std::size_t> label_items_;
    std::unordered_map<std::string, unsigned> label_lines_;
    Address end_address_ = 0;

    std::vector<Expr> pending_values_;
    std::unordered_map<std::string, std::size_t> pending_index_;
    std::vector<std::size_t> pending_loads_;
    std::optional<PendingTb> pending_tb_;

    unsigned it_remaining_ = 0;
    unsigned it_count_ = 0;
    std::uint8_t it_else_ = 0;
    CondCode it_cond_ = CondCode::AL;
    unsigned it_line_ = 0;
};

} // namespace

ProgramImage assemble(std::string_view source, const AsmOptions& options) {
    return Assembler(source, options).run();
}

CodeSizeReport code_size_report(const ProgramImage& image) {
    CodeSizeReport r;
    for (const auto& rec : image.instructions) {
        if (rec.insn.width_bits == 16) {
            ++r.count16;
        } else {
            ++r.count32;
        }
        r.instruction_bytes += rec.insn.size_bytes();
    }
    r.pool_bytes = image.pool_bytes;
    r.data_bytes = image.data_bytes;
    r.total_bytes = r.instruction_bytes + r.pool_bytes + r.data_bytes;
    r.all32_bytes = 4 * (r.count16 + r.count32) + r.pool_bytes + r.data_bytes;
    r.ratio = r.all32_bytes == 0 ? 0.0 : static_cast<double>(r.total_bytes) / static_cast<double>(r.all32_bytes);
    return r;
}

FlatBinary flat_binary(const ProgramImage& image) {
    FlatBinary out;
    if (image.segments.empty()) return out;
    std::uint64_t lo = image.segments.front().base;
    std::uint64_t hi = 0;
    for (const auto& s : image.segments) {
        lo = std::min<std::uint64_t>(lo, s.base);
        hi = std::max(hi, s.end());
    }
    out.base = static_cast<Address>(lo);
    out.bytes.assign(hi - lo, 0);
    for (const auto& s : image.segments) std::copy(s.bytes.begin(), s.bytes.end(), out.bytes.begin() + (s.base - lo));
    return out;
}

} // namespace t2sim::assembler
