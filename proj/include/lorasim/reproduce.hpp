#pragma once

#include <string>
#include <vector>

namespace lorasim {

enum class Exhibit { table3, fig7, fig8, fig9, fig10, fig11 };

Exhibit exhibit_from_string(const std::string& name);
const char* to_string(Exhibit e);

struct ReferenceRow {
    std::string exhibit;
    std::string key;
    std::string metric;
    double target = 0.0;
    double tol = 0.0;
    std::string kind;  // band | min | max | info
    std::string description;
};

std::vector<ReferenceRow> load_reference(const std::string& path);

struct ComparisonRow {
    std::string key;
    std::string metric;
    double observed = 0.0;
    bool has_target = false;
    ReferenceRow ref;
    std::string status;  // pass | fail | info
};

struct ExhibitResult {
    Exhibit exhibit;
    std::vector<ComparisonRow> comparisons;
    int failures = 0;
};

// Runs the canned scenario set for one exhibit, writes the raw run CSVs and
// the observed-vs-reference comparison CSV into out_dir, and returns the
// comparison outcome.
ExhibitResult reproduce(Exhibit exhibit, const std::string& out_dir, int workers,
                        const std::string& reference_csv);

} // namespace lorasim
