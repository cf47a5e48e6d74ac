// Structured pass/fail evidence for the sampled axiom and theorem suites.
#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ammnet {

struct CaseResult {
    std::string check_id;
    int case_index = 0;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    bool expected_failure = false;  // documented counterexamples
};

struct VerifyReport {
    std::string suite;
    uint64_t seed = 0;
    double elapsed_seconds = 0.0;  // excluded from CSV comparisons
    std::vector<CaseResult> cases;

    void add(std::string check_id, int case_index, double residual, double tolerance,
             bool pass, bool expected_failure = false) {
        cases.push_back({std::move(check_id), case_index, residual, tolerance, pass,
                         expected_failure});
    }

    void merge(const VerifyReport& other) {
        cases.insert(cases.end(), other.cases.begin(), other.cases.end());
    }

    // Order-stable regardless of how cases were produced.
    void sort() {
        std::stable_sort(cases.begin(), cases.end(),
                         [](const CaseResult& a, const CaseResult& b) {
                             if (a.check_id != b.check_id) return a.check_id < b.check_id;
                             return a.case_index < b.case_index;
                         });
    }

    // A failure is unexpected unless the case is a registered counterexample.
    int unexpected_failures() const {
        int n = 0;
        for (const auto& c : cases)
            if (c.pass == c.expected_failure) ++n;
        return n;
    }

    int failures() const {
        int n = 0;
        for (const auto& c : cases)
            if (!c.pass) ++n;
        return n;
    }

    double max_residual(const std::string& check_id) const {
        double m = 0;
        for (const auto& c : cases)
            if (c.check_id == check_id) m = std::max(m, std::abs(c.residual));
        return m;
    }

    bool has_check(const std::string& check_id) const {
        for (const auto& c : cases)
            if (c.check_id == check_id) return true;
        return false;
    }
};

// Fixed column order; round-trips exactly through parse_report_csv.
inline std::string to_csv(const VerifyReport& rep) {
    std::ostringstream os;
    os << "check_id,seed,case,residual,tolerance,pass\n";
    os << std::setprecision(17);
    for (const auto& c : rep.cases) {
        os << c.check_id << ',' << rep.seed << ',' << c.case_index << ',' << c.residual
           << ',' << c.tolerance << ',' << (c.pass ? 1 : 0) << '\n';
    }
    return os.str();
}

inline VerifyReport parse_report_csv(const std::string& text) {
    VerifyReport rep;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "check_id,seed,case,residual,tolerance,pass")
        throw std::runtime_error("report CSV: bad header");
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        CaseResult c;
        std::string field;
        std::getline(ls, c.check_id, ',');
        std::getline(ls, field, ',');
        const uint64_t seed = std::stoull(field);
        if (first) { rep.seed = seed; first = false; }
        else if (seed != rep.seed) throw std::runtime_error("report CSV: mixed seeds");
        std::getline(ls, field, ',');
        c.case_index = std::stoi(field);
        std::getline(ls, field, ',');
        c.residual = std::stod(field);
        std::getline(ls, field, ',');
        c.tolerance = std::stod(field);
        std::getline(ls, field, ',');
        c.pass = field == "1";
        rep.cases.push_back(std::move(c));
    }
    return rep;
}

}  // namespace ammnet
