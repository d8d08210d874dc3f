#pragma once

#include <iosfwd>
#include <string>

#include "gscreen/certify.hpp"
#include "gscreen/geometry.hpp"
#include "gscreen/model.hpp"
#include "gscreen/solver.hpp"

namespace gscreen {

/// Floating-point text with 17 significant digits (bit-stable round trips).
std::string format_double(double v);

// CSV schemas (column orders are part of the CLI contract):
//   menu:     y1..yn, price
//   solution: x1..xm, y1..yn, z, u, ic_slack, ir_slack
//   segment:  t, y1..yn, z, residual

void write_menu_csv(std::ostream& out, const ModelSpec& spec, const Menu& menu);
Menu read_menu_csv(std::istream& in, const ModelSpec& spec);

void write_solution_csv(std::ostream& out, const ModelSpec& spec, const AgentGrid& agents,
                        const IndirectUtility& alloc);
void write_segment_csv(std::ostream& out, const ModelSpec& spec, const GSegment& seg);
void write_respond_csv(std::ostream& out, const ModelSpec& spec, const IndirectUtility& alloc);

std::string hypothesis_report_json(const HypothesisReport& report);
std::string certification_report_json(const CombinedReport& report);
std::string solution_summary_json(const Solution& sol);

}  // namespace gscreen
