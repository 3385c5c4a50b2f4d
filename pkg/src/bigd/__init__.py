"""Block intensity and gradient difference (BIGD) texture descriptors.

Dense multi-scale extraction, VLAD / improved Fisher vector encoding and a
one-vs-rest linear SVM, plus a protocol-driven evaluation harness.
"""
from ._backend import BACKEND
from .classifier import SvmModel, svm_predict, svm_train
from .codebook import Codebook, GmmModel, gmm_fit, kmeans_fit, posterior, subsample_descriptors
from .descriptor import DescriptorSet, block_feature, extract_dense, pair_difference, patch_descriptor
from .encoding import EncodedImage, fv_encode, l2_normalize, signed_sqrt, vlad_encode
from .gradients import ChannelMaps, IntegralStack, block_mean, integrate, sobel
from .imageio import PatchGrid, load_grayscale, patch_grid, resize
from .sampling import SamplingPattern, load_pattern, sample_pattern, save_pattern

__version__ = "0.1.0"
