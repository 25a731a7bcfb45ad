#include "langchange/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "langchange/errors.hpp"

#ifndef LANGCHANGE_DEFAULT_DATA_DIR
#define LANGCHANGE_DEFAULT_DATA_DIR "data"
#endif

namespace langchange {

namespace {

// ============================================================================
// Tokenising helpers
// ============================================================================

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& tok, const std::string& source, std::size_t line) {
    std::string t = trim(tok);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ParseError(source, line, "expected a number, got '" + tok + "'");
    return v;
}

std::int64_t parse_integer(const std::string& tok, const std::string& source, std::size_t line) {
    std::string t = trim(tok);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ParseError(source, line, "expected an integer, got '" + tok + "'");
    return v;
}

// Iterates over non-comment, non-blank lines, passing (fields, line number).
template <typename F>
void for_each_row(std::istream& in, const std::string& source, std::size_t n_fields, F&& f) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        auto fields = split(line, '\t');
        if (fields.size() != n_fields)
            throw ParseError(source, lineno,
                             fmt::format("expected {} tab-separated fields, found {}", n_fields, fields.size()));
        f(fields, lineno);
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input file: " + path);
    return in;
}

ArticleRecord parse_stages(const std::string& field, Article article, const std::string& source,
                           std::size_t line) {
    ArticleRecord rec;
    rec.article = article;
    for (const auto& tok : split(trim(field), ',')) {
        std::string t = trim(tok);
        if (t.size() != 1 || t[0] < '0' || t[0] > '9')
            throw ValidationError(fmt::format("{}:{}: unknown stage symbol '{}'", source, line, t));
        int idx = t[0] - '0';
        if (idx >= kCycleLength)
            throw ValidationError(fmt::format("{}:{}: unknown stage symbol '{}'", source, line, t));
        if (!rec.stages.empty() && rec.stages.back().index() == idx)
            throw ValidationError(fmt::format("{}:{}: repeated consecutive stage {}", source, line, idx));
        rec.stages.emplace_back(idx);
    }
    return rec;
}

std::string format_stages(const ArticleRecord& rec) {
    std::string s;
    for (std::size_t i = 0; i < rec.stages.size(); ++i) {
        if (i) s += ',';
        s += static_cast<char>('0' + rec.stages[i].index());
    }
    return s;
}

}  // namespace

// ============================================================================
// Histories
// ============================================================================

std::vector<LanguageHistory> parse_histories(std::istream& in, const std::string& source) {
    std::vector<LanguageHistory> out;
    for_each_row(in, source, 5, [&](const std::vector<std::string>& f, std::size_t line) {
        LanguageHistory h;
        h.name = trim(f[0]);
        if (h.name.empty()) throw ParseError(source, line, "empty language name");
        for (const auto& w : split(trim(f[1]), ';')) {
            auto dots = w.find("..");
            if (dots == std::string::npos) throw ParseError(source, line, "window must be 'start..end': " + w);
            ObservationWindow win{parse_number(w.substr(0, dots), source, line),
                                  parse_number(w.substr(dots + 2), source, line)};
            if (!(win.end > win.start))
                throw ValidationError(fmt::format("{}:{}: window end must exceed start", source, line));
            h.windows.push_back(win);
        }
        h.definite = parse_stages(f[2], Article::definite, source, line);
        h.indefinite = parse_stages(f[3], Article::indefinite, source, line);
        h.weight = parse_number(f[4], source, line);
        if (!(h.weight > 0.0)) throw ValidationError(fmt::format("{}:{}: weight must be positive", source, line));
        out.push_back(std::move(h));
    });
    return out;
}

std::vector<LanguageHistory> load_histories(const std::string& path) {
    auto in = open_input(path);
    return parse_histories(in, path);
}

void write_histories(std::ostream& out, const std::vector<LanguageHistory>& histories) {
    out << "# name\twindows\tdefinite\tindefinite\tweight\n";
    for (const auto& h : histories) {
        std::string windows;
        for (std::size_t i = 0; i < h.windows.size(); ++i) {
            if (i) windows += ';';
            windows += fmt::format("{}..{}", h.windows[i].start, h.windows[i].end);
        }
        out << fmt::format("{}\t{}\t{}\t{}\t{:#.3g}\n", h.name, windows, format_stages(h.definite),
                           format_stages(h.indefinite), h.weight);
    }
}

// ============================================================================
// WALS counts, regions, composition
// ============================================================================

std::map<Article, CycleDistribution> load_wals(const std::string& path) {
    auto in = open_input(path);
    std::map<Article, CycleDistribution> out;
    for_each_row(in, path, 5, [&](const std::vector<std::string>& f, std::size_t line) {
        Article a = parse_article(trim(f[0]));
        std::array<std::int64_t, kCycleLength> counts{};
        for (int i = 0; i < kCycleLength; ++i) counts[i] = parse_integer(f[i + 1], path, line);
        out[a] = stationary_fractions(counts);
    });
    return out;
}

std::vector<RegionPopulationRecord> load_regions(const std::string& path) {
    auto in = open_input(path);
    std::vector<RegionPopulationRecord> out;
    for_each_row(in, path, 3, [&](const std::vector<std::string>& f, std::size_t line) {
        RegionPopulationRecord r{trim(f[0]), parse_number(f[1], path, line), parse_number(f[2], path, line)};
        if (!(r.size > 0.0)) throw ValidationError(fmt::format("{}:{}: population size must be positive", path, line));
        out.push_back(std::move(r));
    });
    return out;
}

CompositionTable load_composition(const std::string& path) {
    auto in = open_input(path);
    CompositionTable out;
    for_each_row(in, path, 3, [&](const std::vector<std::string>& f, std::size_t line) {
        double frac = parse_number(f[2], path, line);
        if (!(frac > 0.0)) throw ValidationError(fmt::format("{}:{}: fraction must be positive", path, line));
        out[trim(f[0])][trim(f[1])] = frac;
    });
    return out;
}

std::map<std::string, double> load_region_weights(const std::string& path) {
    auto in = open_input(path);
    std::map<std::string, double> out;
    for_each_row(in, path, 2, [&](const std::vector<std::string>& f, std::size_t line) {
        out[trim(f[0])] = parse_number(f[1], path, line);
    });
    return out;
}

void attach_composition(std::vector<LanguageHistory>& histories, const CompositionTable& table) {
    for (const auto& [lang, regions] : table) {
        auto it = std::find_if(histories.begin(), histories.end(),
                               [&](const LanguageHistory& h) { return h.name == lang; });
        if (it == histories.end()) throw LookupError("composition names unknown language: " + lang);
        it->composition = regions;
    }
}

std::string default_data_dir() {
    if (const char* env = std::getenv("LANGCHANGE_DATA_DIR"); env && *env) return env;
    return LANGCHANGE_DEFAULT_DATA_DIR;
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    Dataset d;
    d.histories = load_histories((fs::path(dir) / "histories.tsv").string());
    auto comp = fs::path(dir) / "composition.tsv";
    if (fs::exists(comp)) attach_composition(d.histories, load_composition(comp.string()));
    d.wals = load_wals((fs::path(dir) / "wals.tsv").string());
    return d;
}

}  // namespace langchange
