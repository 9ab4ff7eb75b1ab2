#pragma once

#include "seqrank/analyzer.hpp"
#include "seqrank/bm25.hpp"
#include "seqrank/config.hpp"
#include "seqrank/corpus_io.hpp"
#include "seqrank/error.hpp"
#include "seqrank/index.hpp"
#include "seqrank/metrics.hpp"
#include "seqrank/pipeline.hpp"
#include "seqrank/porter.hpp"
#include "seqrank/remote_scorer.hpp"
#include "seqrank/reranking.hpp"
#include "seqrank/rm3.hpp"
#include "seqrank/sampling.hpp"
#include "seqrank/stats.hpp"
