#pragma once

#include "r0scope/store.hpp"
#include "test_support.hpp"

namespace r0test {

// Three papers, five summaries over two diseases and two countries: two
// Ebola (Liberia, Guinea) and three COVID-19 (Guinea twice, Liberia once);
// the largest r0_max is 5.7.
inline r0scope::UpsertBatch three_paper_batch() {
  r0scope::UpsertBatch b;
  b.papers = {paper("101", "Ebola transmission in Liberia", 2015, "We estimate R0 for Ebola."),
              paper("102", "Ebola and COVID-19 in Guinea", 2021, "Two outbreaks compared."),
              paper("103", "Early COVID-19 dynamics", 2020, "Data from Conakry, Guinea.")};
  b.summaries = {summary("101", "Ebola", "Liberia", 1.5, 2.0), summary("102", "ebola", "Guinea", 1.2, 1.6),
                 summary("102", "COVID-19", "Guinea", 2.2, 3.5), summary("103", "COVID-19", "Conakry, Guinea", 4.1, 5.7),
                 summary("103", "covid-19", "Liberia", 2.0, 2.6)};
  return b;
}

}  // namespace r0test
