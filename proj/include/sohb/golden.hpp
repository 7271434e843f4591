#pragma once

#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "unknowns.hpp"

// Published steady-state harmonic tables. Read only by comparison code and
// tests; the solver never sees them.
namespace sohb::golden {

// Signal "i_pp" is the tables' i_d*, the reference before the hard limit.
// Column 0 is the measured (FFT) value, column 1 the N = 3 iteration, and
// for Test 1 columns 2..4 the N = 2, 1, 0 iterations.
struct GoldenEntry {
    std::string signal;
    Part part;
    int k = 0;
    int n = 0;
    std::vector<std::optional<double>> values;
};

enum Column { Measured = 0, Iter3 = 1, Iter2 = 2, Iter1 = 3, Iter0 = 4 };

inline int column_for_order(int order) {
    if (order < 0 || order > 3) return -1;
    return order == 0 ? Iter0 : 4 - order;
}

inline std::string label(const GoldenEntry& e) {
    if (e.part == Part::Scalar) return e.signal;
    const char* p = e.part == Part::Re ? "R" : e.part == Part::Im ? "I" : e.part == Part::Mag ? "M" : "A";
    std::string at;
    if (e.k == 1) {
        at = "1";
        if (e.n != 0) at += (e.n > 0 ? "+" : "-") + (std::abs(e.n) == 1 ? std::string() : std::to_string(std::abs(e.n))) + "s";
    } else {
        at = e.n == 0 ? "0" : (e.n == 1 ? std::string() : std::to_string(e.n)) + "s";
    }
    return std::string(p) + "(" + e.signal + "<" + at + ">)";
}

inline const std::vector<GoldenEntry>& table_test1() {
    static const std::vector<GoldenEntry> t{
        {"m_a", Part::Im, 1, 0, {0.0700, 0.0700, 0.0700, 0.0699, 0.0698}},
        {"m_a", Part::Re, 1, 0, {0.4069, 0.4069, 0.4069, 0.4064, 0.4060}},
        {"m_a", Part::Im, 1, -1, {0.0264, 0.0264, 0.0263, 0.0185, std::nullopt}},
        {"m_a", Part::Re, 1, -1, {0.0223, 0.0222, 0.0222, 0.0156, std::nullopt}},
        {"m_a", Part::Im, 1, -2, {0.0013, 0.0013, 0.0013, std::nullopt, std::nullopt}},
        {"m_a", Part::Re, 1, -2, {0.0018, 0.0018, 0.0017, std::nullopt, std::nullopt}},
        {"m_a", Part::Im, 1, -3, {0.0000, 0.0002, std::nullopt, std::nullopt, std::nullopt}},
        {"m_a", Part::Re, 1, -3, {0.0002, 0.0001, std::nullopt, std::nullopt, std::nullopt}},
        {"m_a", Part::Im, 1, 1, {0.0105, 0.0104, 0.0104, 0.0074, std::nullopt}},
        {"m_a", Part::Re, 1, 1, {0.0017, 0.0017, 0.0017, 0.0012, 0.0012}},
        {"m_a", Part::Im, 1, 2, {-0.0006, -0.0006, -0.0006, std::nullopt, std::nullopt}},
        {"m_a", Part::Re, 1, 2, {-0.0020, -0.0020, -0.0020, std::nullopt, std::nullopt}},
        {"m_a", Part::Im, 1, 3, {-0.0002, -0.0001, std::nullopt, std::nullopt, std::nullopt}},
        {"m_a", Part::Re, 1, 3, {-0.0000, 0.0000, std::nullopt, std::nullopt, std::nullopt}},
        {"u_dc", Part::Im, 0, 1, {46.3599, 46.2193, 46.1786, 32.5638, std::nullopt}},
        {"u_dc", Part::Re, 0, 1, {-31.4876, -31.3859, -31.3578, -21.9784, std::nullopt}},
        {"u_dc", Part::Im, 0, 2, {-0.4680, -0.4561, -0.4498, std::nullopt, std::nullopt}},
        {"u_dc", Part::Re, 0, 2, {-2.5048, -2.4973, -2.5263, std::nullopt, std::nullopt}},
        {"u_dc", Part::Im, 0, 3, {-0.1336, -0.0270, std::nullopt, std::nullopt, std::nullopt}},
        {"u_dc", Part::Re, 0, 3, {-0.0912, -0.0369, std::nullopt, std::nullopt, std::nullopt}},
        {"u_ga", Part::Im, 1, -1, {-0.3960, -0.3949, -0.3942, -0.2867, std::nullopt}},
        {"u_ga", Part::Re, 1, 0, {152.9957, 153.0042, 153.0047, 153.1435, 153.2764}},
        {"u_ga", Part::Im, 1, -2, {-0.2893, -0.2902, -0.2905, std::nullopt, std::nullopt}},
        {"u_ga", Part::Re, 1, -1, {2.2745, 2.2684, 2.2664, 1.6151, std::nullopt}},
        {"u_ga", Part::Im, 1, -3, {-0.0288, -0.0177, std::nullopt, std::nullopt, std::nullopt}},
        {"u_ga", Part::Re, 1, -2, {0.2497, 0.2481, 0.2510, std::nullopt, std::nullopt}},
        {"u_ga", Part::Im, 1, 1, {7.9200, 7.8933, 7.8858, 5.5617, std::nullopt}},
        {"u_ga", Part::Re, 1, -3, {0.0140, 0.0097, std::nullopt, std::nullopt, std::nullopt}},
        {"u_ga", Part::Im, 1, 2, {-0.3466, -0.3415, -0.3399, std::nullopt, std::nullopt}},
        {"u_ga", Part::Re, 1, 1, {-4.7677, -4.7495, -4.7448, -3.3183, std::nullopt}},
        {"u_ga", Part::Im, 1, 3, {-0.0925, -0.0572, std::nullopt, std::nullopt, std::nullopt}},
        {"u_ga", Part::Re, 1, 2, {-0.9802, -0.9774, -0.9817, std::nullopt, std::nullopt}},
        {"theta0", Part::Mag, 0, 0, {0.1090, 0.1090, 0.1090, 0.1093, 0.1097}},
        {"u_ga", Part::Re, 1, 3, {0.0112, 0.0356, std::nullopt, std::nullopt, std::nullopt}},
        {"theta0", Part::Mag, 0, 1, {0.0328, 0.0327, 0.0327, 0.0230, std::nullopt}},
        {"theta0", Part::Ang, 0, 2, {1.7632, 1.7606, 1.7579, std::nullopt, std::nullopt}},
        {"theta0", Part::Mag, 0, 2, {0.0036, 0.0036, 0.0036, std::nullopt, std::nullopt}},
        {"f_s", Part::Scalar, 0, 0, {9.9000, 9.8926, 9.8923, 9.9106, std::nullopt}},
    };
    return t;
}

inline const std::vector<GoldenEntry>& table_test4() {
    static const std::vector<GoldenEntry> t{
        {"m_a", Part::Im, 1, 0, {0.0924, 0.0924}},
        {"m_a", Part::Re, 1, 0, {0.3981, 0.3981}},
        {"m_a", Part::Im, 1, -1, {-0.0273, -0.0275}},
        {"m_a", Part::Re, 1, -1, {-0.0087, -0.0088}},
        {"m_a", Part::Im, 1, -2, {0.0010, 0.0010}},
        {"m_a", Part::Re, 1, -2, {0.0000, -0.0000}},
        {"m_a", Part::Im, 1, -3, {0.0001, -0.0004}},
        {"m_a", Part::Re, 1, -3, {0.0007, 0.0013}},
        {"m_a", Part::Im, 1, 1, {0.1659, 0.1659}},
        {"m_a", Part::Re, 1, 1, {0.0012, 0.0012}},
        {"m_a", Part::Im, 1, 2, {-0.0008, -0.0007}},
        {"m_a", Part::Re, 1, 2, {-0.0032, -0.0033}},
        {"m_a", Part::Im, 1, 3, {0.0018, 0.0013}},
        {"m_a", Part::Re, 1, 3, {0.0011, 0.0009}},
        {"u_dc", Part::Im, 0, 1, {-42.4578, -42.6686}},
        {"u_dc", Part::Re, 0, 1, {13.5175, 13.6314}},
        {"u_dc", Part::Im, 0, 2, {-0.1083, -0.0866}},
        {"u_dc", Part::Re, 0, 2, {-1.6015, -1.6478}},
        {"u_dc", Part::Im, 0, 3, {0.4546, -0.0151}},
        {"u_dc", Part::Re, 0, 3, {-0.3035, -0.6512}},
        {"u_ga", Part::Im, 1, -1, {-0.8489, -0.8481}},
        {"u_ga", Part::Re, 1, 0, {150.5553, 150.5558}},
        {"u_ga", Part::Im, 1, -2, {-0.0532, -0.0670}},
        {"u_ga", Part::Re, 1, -1, {-1.8337, -1.8488}},
        {"u_ga", Part::Im, 1, -3, {-0.0323, -0.0959}},
        {"u_ga", Part::Re, 1, -2, {0.1447, 0.1405}},
        {"u_ga", Part::Im, 1, 1, {-8.5376, -8.5952}},
        {"u_ga", Part::Re, 1, -3, {0.1582, 0.2397}},
        {"u_ga", Part::Im, 1, 2, {-0.3192, -0.3120}},
        {"u_ga", Part::Re, 1, 1, {3.7156, 3.7420}},
        {"u_ga", Part::Im, 1, 3, {0.6127, 0.3730}},
        {"u_ga", Part::Re, 1, 2, {-1.2688, -1.3065}},
        {"i_pp", Part::Ang, 0, 1, {-2.7776, -2.7766}},
        {"u_ga", Part::Re, 1, 3, {0.2065, 0.1347}},
        {"i_pp", Part::Ang, 0, 2, {1.7345, 1.7494}},
        {"theta0", Part::Ang, 0, 2, {1.4990, 1.4912}},
        {"i_pp", Part::Ang, 0, 3, {0.7599, 0.7544}},
        {"theta0", Part::Mag, 0, 0, {0.1659, 0.1659}},
        {"i_pp", Part::Mag, 0, 0, {121.1721, 121.1716}},
        {"theta0", Part::Mag, 0, 1, {0.0351, 0.0353}},
        {"i_pp", Part::Mag, 0, 1, {80.0074, 80.3491}},
        {"theta0", Part::Mag, 0, 2, {0.0039, 0.0040}},
        {"i_pp", Part::Mag, 0, 2, {1.4478, 1.4868}},
        {"f_s", Part::Scalar, 0, 0, {8.8750, 8.8864}},
        {"i_pp", Part::Mag, 0, 3, {0.3312, 0.3943}},
    };
    return t;
}

inline const std::vector<GoldenEntry>& table_test2() {
    static const std::vector<GoldenEntry> t{
        {"m_a", Part::Im, 1, 0, {0.0698, 0.0698}},
        {"m_a", Part::Re, 1, 0, {0.4062, 0.4063}},
        {"m_a", Part::Im, 1, -1, {-0.0104, -0.0105}},
        {"m_a", Part::Re, 1, -1, {-0.0146, -0.0148}},
        {"m_a", Part::Im, 1, -2, {0.0001, 0.0001}},
        {"m_a", Part::Re, 1, -2, {0.0005, 0.0006}},
        {"m_a", Part::Im, 1, -3, {-0.0000, -0.0000}},
        {"m_a", Part::Re, 1, -3, {-0.0000, -0.0000}},
        {"m_a", Part::Im, 1, 1, {-0.0055, -0.0056}},
        {"m_a", Part::Re, 1, 1, {0.0005, 0.0005}},
        {"m_a", Part::Im, 1, 2, {-0.0005, -0.0005}},
        {"m_a", Part::Re, 1, 2, {-0.0004, -0.0004}},
        {"m_a", Part::Im, 1, 3, {0.0000, 0.0000}},
        {"m_a", Part::Re, 1, 3, {-0.0001, -0.0000}},
        {"u_dc", Part::Im, 0, 1, {-19.2614, -19.5120}},
        {"u_dc", Part::Re, 0, 1, {21.9410, 22.2239}},
        {"u_dc", Part::Im, 0, 2, {-0.4490, -0.4728}},
        {"u_dc", Part::Re, 0, 2, {-0.4827, -0.5102}},
        {"u_dc", Part::Im, 0, 3, {0.0044, -0.0158}},
        {"u_dc", Part::Re, 0, 3, {-0.0128, 0.0051}},
        {"u_ga", Part::Im, 1, -1, {0.5081, 0.5146}},
        {"u_ga", Part::Re, 1, 0, {153.1952, 153.2011}},
        {"u_ga", Part::Im, 1, -2, {-0.0948, -0.1000}},
        {"u_ga", Part::Re, 1, -1, {-1.0973, -1.1119}},
        {"u_ga", Part::Im, 1, -3, {0.0002, -0.0023}},
        {"u_ga", Part::Re, 1, -2, {0.0165, 0.0171}},
        {"u_ga", Part::Im, 1, 1, {-3.3640, -3.4069}},
        {"u_ga", Part::Re, 1, -3, {0.0001, -0.0020}},
        {"u_ga", Part::Im, 1, 2, {-0.2245, -0.2362}},
        {"u_ga", Part::Re, 1, 1, {3.4376, 3.4803}},
        {"u_ga", Part::Im, 1, 3, {0.0096, 0.0044}},
        {"u_ga", Part::Re, 1, 2, {-0.1739, -0.1839}},
        {"i_pp", Part::Ang, 0, 1, {-2.2293, -2.2293}},
        {"u_ga", Part::Re, 1, 3, {-0.0219, -0.0176}},
        {"i_pp", Part::Ang, 0, 2, {2.4434, 2.4417}},
        {"theta0", Part::Ang, 0, 2, {2.3279, 2.3264}},
        {"i_pp", Part::Ang, 0, 3, {1.4270, 0.4964}},
        {"theta0", Part::Mag, 0, 0, {0.1095, 0.1095}},
        {"i_pp", Part::Mag, 0, 0, {108.1386, 108.1452}},
        {"theta0", Part::Mag, 0, 1, {0.0171, 0.0173}},
        {"i_pp", Part::Mag, 0, 1, {47.0950, 47.7159}},
        {"theta0", Part::Mag, 0, 2, {0.0010, 0.0010}},
        {"i_pp", Part::Mag, 0, 2, {0.5348, 0.5644}},
        {"f_s", Part::Scalar, 0, 0, {9.8750, 9.8833}},
        {"i_pp", Part::Mag, 0, 3, {0.0074, 0.0091}},
    };
    return t;
}

inline const std::vector<GoldenEntry>& table_test3() {
    static const std::vector<GoldenEntry> t{
        {"m_a", Part::Im, 1, 0, {0.0924, 0.0924}},
        {"m_a", Part::Re, 1, 0, {0.3981, 0.3981}},
        {"m_a", Part::Im, 1, -1, {-0.0060, -0.0060}},
        {"m_a", Part::Re, 1, -1, {-0.0306, -0.0306}},
        {"m_a", Part::Im, 1, -2, {0.0001, 0.0001}},
        {"m_a", Part::Re, 1, -2, {0.0004, 0.0004}},
        {"m_a", Part::Im, 1, -3, {-0.0001, 0.0004}},
        {"m_a", Part::Re, 1, -3, {-0.0004, -0.0006}},
        {"m_a", Part::Im, 1, 1, {-0.0039, -0.0040}},
        {"m_a", Part::Re, 1, 1, {0.0099, 0.0099}},
        {"m_a", Part::Im, 1, 2, {-0.0035, -0.0036}},
        {"m_a", Part::Re, 1, 2, {0.0048, 0.0048}},
        {"m_a", Part::Im, 1, 3, {-0.0015, -0.0010}},
        {"m_a", Part::Re, 1, 3, {-0.0003, -0.0003}},
        {"u_dc", Part::Im, 0, 1, {-9.1153, -9.1206}},
        {"u_dc", Part::Re, 0, 1, {47.2927, 47.4322}},
        {"u_dc", Part::Im, 0, 2, {-1.1964, -1.2400}},
        {"u_dc", Part::Re, 0, 2, {2.2949, 2.3215}},
        {"u_dc", Part::Im, 0, 3, {-0.3418, 0.1168}},
        {"u_dc", Part::Re, 0, 3, {0.2819, 0.4105}},
        {"u_ga", Part::Im, 1, -1, {1.2887, 1.2964}},
        {"u_ga", Part::Re, 1, 0, {150.4961, 150.4972}},
        {"u_ga", Part::Im, 1, -2, {0.0819, 0.0964}},
        {"u_ga", Part::Re, 1, -1, {-1.7858, -1.7898}},
        {"u_ga", Part::Im, 1, -3, {0.0261, 0.1023}},
        {"u_ga", Part::Re, 1, -2, {-0.1113, -0.1165}},
        {"u_ga", Part::Im, 1, 1, {-0.8539, -0.8542}},
        {"u_ga", Part::Re, 1, -3, {-0.0899, -0.1284}},
        {"u_ga", Part::Im, 1, 2, {-1.1899, -1.2246}},
        {"u_ga", Part::Re, 1, 1, {9.9752, 10.0060}},
        {"u_ga", Part::Im, 1, 3, {-0.5271, -0.3336}},
        {"u_ga", Part::Re, 1, 2, {1.8356, 1.8561}},
        {"i_pp", Part::Ang, 0, 1, {-1.7056, -1.7052}},
        {"u_ga", Part::Re, 1, 3, {0.0515, 0.0593}},
        {"i_pp", Part::Ang, 0, 2, {-1.9406, -1.9506}},
        {"theta0", Part::Ang, 0, 2, {-2.3852, -2.3910}},
        {"i_pp", Part::Ang, 0, 3, {-2.2865, -1.1283}},
        {"theta0", Part::Mag, 0, 0, {0.1659, 0.1659}},
        {"i_pp", Part::Mag, 0, 0, {135.6834, 135.6111}},
        {"theta0", Part::Mag, 0, 1, {0.0379, 0.038}},
        {"i_pp", Part::Mag, 0, 1, {86.7301, 86.9757}},
        {"theta0", Part::Mag, 0, 2, {0.0062, 0.0063}},
        {"i_pp", Part::Mag, 0, 2, {2.3409, 2.3806}},
        {"f_s", Part::Scalar, 0, 0, {8.8500, 8.8522}},
        {"i_pp", Part::Mag, 0, 3, {0.2692, 0.2593}},
    };
    return t;
}

struct GoldenTable {
    std::string name;
    std::string preset;
    const std::vector<GoldenEntry>* entries;
};

inline const std::vector<GoldenTable>& tables() {
    static const std::vector<GoldenTable> t{{"golden test1", "test1", &table_test1()},
                                            {"golden test4", "test4", &table_test4()},
                                            {"golden test2", "test2", &table_test2()},
                                            {"golden test3", "test3", &table_test3()}};
    return t;
}

inline const GoldenTable* table_for(const std::string& preset) {
    for (const auto& t : tables())
        if (t.preset == preset) return &t;
    return nullptr;
}

inline std::optional<double> lookup(const GoldenTable& t, const std::string& signal, Part part, int k, int n, int column) {
    for (const auto& e : *t.entries)
        if (e.signal == signal && e.part == part && e.k == k && e.n == n && column < static_cast<int>(e.values.size()))
            return e.values[column];
    return std::nullopt;
}

}  // namespace sohb::golden
