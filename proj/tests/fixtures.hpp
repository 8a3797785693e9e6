#pragma once

#include <string>
#include <vector>

#include "ml/dataset.hpp"

namespace fixtures {

/// Quinlan's 14-day play dataset (class N/P over Outlook, Temperature,
/// Humidity, Wind).
inline ml::Dataset play_tennis() {
    using ml::Column;
    using ml::ColumnKind;
    const std::vector<std::string> outlook = {"sunny", "sunny",    "overcast", "rain", "rain",
                                              "rain",  "overcast", "sunny",    "sunny", "rain",
                                              "sunny", "overcast", "overcast", "rain"};
    const std::vector<std::string> temperature = {"hot",  "hot",  "hot",  "mild", "cool",
                                                  "cool", "cool", "mild", "cool", "mild",
                                                  "mild", "mild", "hot",  "mild"};
    const std::vector<std::string> humidity = {"high",   "high",   "high",   "high",  "normal",
                                               "normal", "normal", "high",   "normal", "normal",
                                               "normal", "high",   "normal", "high"};
    const std::vector<std::string> wind = {"weak",   "strong", "weak", "weak", "weak",
                                           "strong", "strong", "weak", "weak", "weak",
                                           "strong", "strong", "weak", "strong"};
    const std::vector<std::string> cls = {"N", "N", "P", "P", "P", "N", "P",
                                          "N", "P", "P", "P", "P", "P", "N"};

    auto make = [](std::string name, const std::vector<std::string>& values) {
        Column c;
        c.name = std::move(name);
        c.kind = ColumnKind::categorical;
        c.cat = values;
        c.missing.assign(values.size(), 0);
        return c;
    };
    ml::Dataset d({make("Outlook", outlook), make("Temperature", temperature),
                   make("Humidity", humidity), make("Wind", wind), make("Class", cls)});
    d.set_label("Class");
    return d;
}

inline ml::Dataset numeric_dataset(const std::vector<std::string>& names,
                                   const std::vector<std::vector<double>>& columns,
                                   const std::string& label = "") {
    std::vector<ml::Column> cols;
    for (std::size_t j = 0; j < names.size(); ++j) {
        ml::Column c;
        c.name = names[j];
        c.kind = ml::ColumnKind::numeric;
        c.num = columns[j];
        c.missing.assign(columns[j].size(), 0);
        cols.push_back(std::move(c));
    }
    ml::Dataset d(std::move(cols));
    if (!label.empty()) d.set_label(label);
    return d;
}

}  // namespace fixtures
