#pragma once

#include <map>
#include <string>
#include <vector>

#include "deft/chebyshev.hpp"
#include "deft/graph.hpp"
#include "deft/tensor.hpp"

namespace deft {

/// DEFT-SNAPSHOTS v1, strict: unknown directives and count mismatches are
/// parse errors that name the offending line.
DynamicGraph load_snapshots(const std::string& path);
void save_snapshots(const DynamicGraph& graph, const std::string& path);

/// DEFT-CKPT v1: flat parameter-name -> shape + row-major values store.
void save_checkpoint(const std::vector<nn::Parameter>& params, const std::string& path);
/// Loads values into the given parameters by name; missing or extra names
/// and shape mismatches are errors.
void load_checkpoint(std::vector<nn::Parameter>& params, const std::string& path);

/// key=value config file; '#' starts a comment; duplicate keys are errors.
std::map<std::string, std::string> parse_config_file(const std::string& path);
void write_config_file(const std::map<std::string, std::string>& entries,
                       const std::string& path);

/// CSV emitters. Fixed formats, '.' decimal separator, '\n' endings.
void write_filter_response_csv(const FilterResponseTable& table, const std::string& path);
void write_wavelet_csv(const std::vector<double>& psi, const std::string& path);
void write_loss_csv(const std::vector<double>& loss_per_epoch, const std::string& path);
void write_metrics_csv(const std::vector<std::pair<std::string, double>>& metrics,
                       const std::string& path);

}  // namespace deft
