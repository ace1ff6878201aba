#pragma once

#include <string>

#include "json.hpp"

#include "atlas/complexity.hpp"
#include "atlas/econometrics.hpp"
#include "atlas/inequality.hpp"
#include "atlas/matrix.hpp"
#include "atlas/productspace.hpp"

namespace atlas::io {

using json = nlohmann::ordered_json;

/// Rounds to 12 significant digits so serialized output is stable.
double round12(double v);
json number(double v);
json number(const std::optional<double>& v);

/// Deterministic text form used for every persisted and served payload.
std::string dump(const json& j);

/// `{rows:[...], cols:[...], entries:[[i,j,v],...]}` over nonzero cells.
json triplet(const Registry& rows, const Registry& cols, const Eigen::MatrixXd& values);
json triplet(const matrix::AdvantageMatrix& adv);
matrix::AdvantageMatrix advantage_from_triplet(const json& j);

/// `{period, country:{code:{eci,fitness,entropy,hhi}}, product:{code:{pci}}}`.
json scores(const complexity::ComplexityScores& s);

json pgi(const inequality::ProductGiniTable& t);
inequality::ProductGiniTable pgi_from_json(const json& j);
/// `product,pgi,n_p,top5_contributors` with contributors as `CODE:gini` joined by ';'.
std::string pgi_csv(const inequality::ProductGiniTable& t);

/// `{nodes:[{id,size,pgi,pci}],links:[{source,target,phi}]}`.
json graph(const productspace::SpaceGraph& g);
std::string graph_edges_csv(const productspace::SpaceGraph& g);

json fit(const econometrics::FitResult& f);
json clarke(const econometrics::ClarkeResult& c);
json whatif(const inequality::WhatIfResult& w);

}  // namespace atlas::io
