#include "mcvar/program.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace mcvar {

double LinearExpr::eval(const std::vector<double>& x) const {
    double v = offset;
    for (const auto& [idx, c] : coeffs) v += c * x[static_cast<std::size_t>(idx)];
    return v;
}

int MixedConicProgram::add_var(const std::string& name) {
    var_names.push_back(name);
    objective.push_back(0.0);
    return n_vars() - 1;
}

namespace {

void check_expr(const LinearExpr& e, int n, std::vector<char>& used, const char* where) {
    for (const auto& [idx, c] : e.coeffs) {
        if (idx < 0 || idx >= n)
            throw Error(Errc::out_of_range,
                        std::string(where) + " references variable " + std::to_string(idx));
        if (!std::isfinite(c))
            throw Error(Errc::invalid_spec, std::string(where) + " has a non-finite coefficient");
        used[static_cast<std::size_t>(idx)] = 1;
    }
}

} // namespace

void MixedConicProgram::validate() const {
    const int n = n_vars();
    if (static_cast<int>(objective.size()) != n)
        throw Error(Errc::invalid_spec, "objective length does not match variable count");
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        if (objective[static_cast<std::size_t>(i)] != 0.0) used[static_cast<std::size_t>(i)] = 1;
    for (const auto& r : eq_rows) check_expr(r.expr, n, used, "equality row");
    for (const auto& r : ineq_rows) check_expr(r.expr, n, used, "inequality row");
    for (const auto& b : soc_blocks) {
        for (const auto& h : b.head) check_expr(h, n, used, "soc head");
        check_expr(b.tail, n, used, "soc tail");
    }
    for (int i : binary_idx) {
        if (i < 0 || i >= n)
            throw Error(Errc::out_of_range, "binary index " + std::to_string(i) + " out of range");
        used[static_cast<std::size_t>(i)] = 1;
    }
    for (const auto& l : links) {
        if (l.binary_var < 0 || l.binary_var >= n || l.weight_var < 0 || l.weight_var >= n)
            throw Error(Errc::out_of_range, "link references variable out of range");
    }
    for (int i = 0; i < n; ++i) {
        if (!used[static_cast<std::size_t>(i)])
            throw Error(Errc::invalid_spec,
                        "variable '" + var_names[static_cast<std::size_t>(i)] + "' is unused");
    }
}

namespace {

void write_expr(std::ostream& out, const LinearExpr& e) {
    out << e.coeffs.size();
    for (const auto& [idx, c] : e.coeffs) out << ' ' << idx << ':' << c;
    out << " off " << e.offset;
}

LinearExpr read_expr(std::istringstream& ss, const char* where) {
    LinearExpr e;
    std::size_t nnz = 0;
    if (!(ss >> nnz)) throw Error(Errc::parse_error, std::string("bad expr count in ") + where);
    for (std::size_t i = 0; i < nnz; ++i) {
        std::string tok;
        if (!(ss >> tok)) throw Error(Errc::parse_error, std::string("truncated expr in ") + where);
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw Error(Errc::parse_error, std::string("bad expr token in ") + where);
        e.coeffs.emplace_back(std::stoi(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
    }
    std::string kw;
    if (!(ss >> kw) || kw != "off" || !(ss >> e.offset))
        throw Error(Errc::parse_error, std::string("missing offset in ") + where);
    return e;
}

} // namespace

void dump_program(const MixedConicProgram& program, std::ostream& out) {
    out << std::setprecision(17);
    out << "mcvar-program 1\n";
    out << "vars " << program.n_vars() << "\n";
    for (const auto& name : program.var_names) out << "var " << name << "\n";
    out << "objective ";
    LinearExpr obj;
    for (int i = 0; i < program.n_vars(); ++i)
        obj.add(i, program.objective[static_cast<std::size_t>(i)]);
    obj.offset = program.objective_offset;
    write_expr(out, obj);
    out << "\n";
    out << "eq " << program.eq_rows.size() << "\n";
    for (const auto& r : program.eq_rows) {
        out << "row ";
        write_expr(out, r.expr);
        out << " rhs " << r.rhs << "\n";
    }
    out << "ineq " << program.ineq_rows.size() << "\n";
    for (const auto& r : program.ineq_rows) {
        out << "row ";
        write_expr(out, r.expr);
        out << " rhs " << r.rhs << "\n";
    }
    out << "soc " << program.soc_blocks.size() << "\n";
    for (const auto& b : program.soc_blocks) {
        out << "block " << b.head.size() << "\n";
        for (const auto& h : b.head) {
            out << "head ";
            write_expr(out, h);
            out << "\n";
        }
        out << "tail ";
        write_expr(out, b.tail);
        out << "\n";
    }
    out << "binary " << program.binary_idx.size();
    for (int i : program.binary_idx) out << ' ' << i;
    out << "\n";
    out << "links " << program.links.size() << "\n";
    for (const auto& l : program.links)
        out << "link " << l.binary_var << ' ' << l.weight_var << ' ' << l.lower << ' ' << l.upper
            << "\n";
    out << "end\n";
}

std::string dump_program(const MixedConicProgram& program) {
    std::ostringstream ss;
    dump_program(program, ss);
    return ss.str();
}

MixedConicProgram parse_program(std::istream& in) {
    MixedConicProgram p;
    std::string line;

    auto next_line = [&](const char* what) -> std::istringstream {
        if (!std::getline(in, line))
            throw Error(Errc::parse_error, std::string("unexpected end of program dump, wanted ") + what);
        return std::istringstream(line);
    };
    auto expect = [&](std::istringstream& ss, const std::string& kw) {
        std::string tok;
        if (!(ss >> tok) || tok != kw)
            throw Error(Errc::parse_error, "expected '" + kw + "' in program dump, got '" + tok + "'");
    };

    {
        auto ss = next_line("header");
        expect(ss, "mcvar-program");
        int version = 0;
        if (!(ss >> version) || version != 1)
            throw Error(Errc::parse_error, "unsupported program dump version");
    }
    std::size_t n = 0;
    {
        auto ss = next_line("vars");
        expect(ss, "vars");
        ss >> n;
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto ss = next_line("var");
        expect(ss, "var");
        std::string name;
        ss >> name;
        p.add_var(name);
    }
    {
        auto ss = next_line("objective");
        expect(ss, "objective");
        LinearExpr obj = read_expr(ss, "objective");
        for (const auto& [idx, c] : obj.coeffs) {
            if (idx < 0 || idx >= p.n_vars())
                throw Error(Errc::parse_error, "objective index out of range");
            p.objective[static_cast<std::size_t>(idx)] = c;
        }
        p.objective_offset = obj.offset;
    }
    auto read_rows = [&](const char* kw, std::vector<LinearRow>& rows) {
        auto ss = next_line(kw);
        expect(ss, kw);
        std::size_t count = 0;
        ss >> count;
        for (std::size_t i = 0; i < count; ++i) {
            auto rs = next_line("row");
            expect(rs, "row");
            LinearRow r;
            r.expr = read_expr(rs, kw);
            std::string tok;
            if (!(rs >> tok) || tok != "rhs" || !(rs >> r.rhs))
                throw Error(Errc::parse_error, "row missing rhs");
            rows.push_back(std::move(r));
        }
    };
    read_rows("eq", p.eq_rows);
    read_rows("ineq", p.ineq_rows);
    {
        auto ss = next_line("soc");
        expect(ss, "soc");
        std::size_t count = 0;
        ss >> count;
        for (std::size_t i = 0; i < count; ++i) {
            auto bs = next_line("block");
            expect(bs, "block");
            std::size_t dim = 0;
            bs >> dim;
            SocBlock block;
            for (std::size_t d = 0; d < dim; ++d) {
                auto hs = next_line("head");
                expect(hs, "head");
                block.head.push_back(read_expr(hs, "soc head"));
            }
            auto ts = next_line("tail");
            expect(ts, "tail");
            block.tail = read_expr(ts, "soc tail");
            p.soc_blocks.push_back(std::move(block));
        }
    }
    {
        auto ss = next_line("binary");
        expect(ss, "binary");
        std::size_t count = 0;
        ss >> count;
        for (std::size_t i = 0; i < count; ++i) {
            int idx = -1;
            if (!(ss >> idx)) throw Error(Errc::parse_error, "truncated binary list");
            p.binary_idx.push_back(idx);
        }
    }
    {
        auto ss = next_line("links");
        expect(ss, "links");
        std::size_t count = 0;
        ss >> count;
        for (std::size_t i = 0; i < count; ++i) {
            auto ls = next_line("link");
            expect(ls, "link");
            SemicontinuousLink l;
            if (!(ls >> l.binary_var >> l.weight_var >> l.lower >> l.upper))
                throw Error(Errc::parse_error, "bad link line");
            p.links.push_back(l);
        }
    }
    {
        auto ss = next_line("end");
        expect(ss, "end");
    }
    p.validate();
    return p;
}

MixedConicProgram parse_program(const std::string& text) {
    std::istringstream ss(text);
    return parse_program(ss);
}

} // namespace mcvar
