#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "lgcn/graph.hpp"

namespace lgcn {

inline constexpr int kDatasetFormatVersion = 1;

/// Malformed dataset file; the message names the file and record.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes meta.json, nodes.csv, edges.csv, remap.csv and either
/// transactions.csv (financial) or profiles.csv (transport) into `dir`.
/// Only raw (un-normalized) graphs can be saved.
void save_dataset(const Multigraph& g, const std::filesystem::path& dir);

/// Inverse of save_dataset; returns the raw graph.
Multigraph load_dataset(const std::filesystem::path& dir);

/// Float text with 17 significant digits (exact round trip).
std::string format_double(double value);
void append_double(std::string& out, double value);

}  // namespace lgcn
