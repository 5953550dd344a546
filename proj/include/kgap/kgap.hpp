#pragma once

#include "kgap/corpus_builder.hpp"
#include "kgap/domain.hpp"
#include "kgap/error.hpp"
#include "kgap/gap_simulators.hpp"
#include "kgap/gqa_ingest.hpp"
#include "kgap/graph_paths.hpp"
#include "kgap/json_stream.hpp"
#include "kgap/kg_tagger.hpp"
#include "kgap/nlg_metrics.hpp"
#include "kgap/parallel.hpp"
#include "kgap/template_engine.hpp"
#include "kgap/text.hpp"
