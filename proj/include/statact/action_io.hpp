#pragma once

#include <iosfwd>
#include <string>

#include "statact/cell_action.hpp"
#include "statact/partition_geometry.hpp"

namespace statact {

// 17-significant-digit decimal form; round-trips every finite double.
std::string format_double(double x);

// Positional decimal with exactly `digits` significant digits (used for the
// human-readable entropy output).
std::string format_significant(double x, int digits);

// Action file schema (JSON, fixed key order, stable formatting):
//   { "group": {"rank": r},
//     "measure": [{"word": "...", "prob": p}, ...],
//     "cells": [{"id": "...", "weight": w}, ...],
//     "transports": {"word": [{"src": id, "dst": id, "T": t, "W": w}, ...]},
//     "kind": "bijective" | "markov" | "opaque" }
// Numbers are written with format_double, so save(load(f)) is byte-identical
// for files produced by this writer. Only transports with exact = true are
// persisted (the schema has no exactness field).
void write_action(std::ostream& out, const CellAction& a);
void save_action(const std::string& path, const CellAction& a);
CellAction load_action(const std::string& path);
CellAction parse_action(const std::string& text);

// CSV emitters. Every table starts with a "#" metadata line carrying the
// tool version, seed, truncation bounds, and tail bound, followed by an
// RFC-4180 header row; all numbers use format_double.
void write_cloud_csv(std::ostream& out, const StatsCloud& c);
void write_delta_csv(std::ostream& out, const DeltaReport& r);

// Partition file: {"pieces": n, "labels": {"cell id": label, ...}}.
OrderedPartition load_partition(const std::string& path, const CellAction& a);

}
