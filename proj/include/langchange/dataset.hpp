#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "langchange/data_model.hpp"

namespace langchange {

// ============================================================================
// Plain-text (tab separated, '#' comments) loaders and writers.
// ============================================================================

std::vector<LanguageHistory> load_histories(const std::string& path);
std::vector<LanguageHistory> parse_histories(std::istream& in, const std::string& source);
void write_histories(std::ostream& out, const std::vector<LanguageHistory>& histories);

std::map<Article, CycleDistribution> load_wals(const std::string& path);

std::vector<RegionPopulationRecord> load_regions(const std::string& path);

// language -> region -> fraction
using CompositionTable = std::map<std::string, std::map<std::string, double>>;
CompositionTable load_composition(const std::string& path);

// Copies composition entries into the matching histories. Throws LookupError
// if the table names a language that is not in the dataset.
void attach_composition(std::vector<LanguageHistory>& histories, const CompositionTable& table);

// region -> published weight
std::map<std::string, double> load_region_weights(const std::string& path);

// Resolves the data directory: LANGCHANGE_DATA_DIR, else the compiled default.
std::string default_data_dir();

struct Dataset {
    std::vector<LanguageHistory> histories;
    std::map<Article, CycleDistribution> wals;
};

// Loads histories.tsv (+ composition.tsv if present) and wals.tsv from dir.
Dataset load_dataset(const std::string& dir);

}  // namespace langchange
