#pragma once

// Unsupervised track: k-means with inertia and silhouette, PCA, and exact t-SNE.

#include "folkdsp/kmeans.hpp"
#include "folkdsp/pca.hpp"
#include "folkdsp/tsne.hpp"
