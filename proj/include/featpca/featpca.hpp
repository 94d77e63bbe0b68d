#pragma once

#include "featpca/autoencoder.hpp"
#include "featpca/errors.hpp"
#include "featpca/gene_graph.hpp"
#include "featpca/kmeans.hpp"
#include "featpca/matrix.hpp"
#include "featpca/metrics.hpp"
#include "featpca/pca.hpp"
#include "featpca/pipeline.hpp"
#include "featpca/preprocess.hpp"
#include "featpca/report.hpp"
#include "featpca/rng.hpp"
#include "featpca/subspace.hpp"
#include "featpca/synth.hpp"
