import pytest

from vitfeat.models import get_model, list_models


def test_thirteen_models_in_published_order():
    models = list_models()
    assert len(models) == 13
    assert models[0].name == "vit_base_patch16_224"
    assert [m.name for m in models] == [
        "vit_base_patch16_224",
        "vit_base_patch32_224",
        "vit_large_patch16_224",
        "vit_small_patch32_224",
        "deit3_small_patch16_224",
        "vit_base_patch8_224",
        "vit_tiny_patch16_224",
        "vit_small_patch16_224",
        "vit_base_patch16_384",
        "vit_tiny_patch16_384",
        "vit_small_patch32_384",
        "vit_small_patch16_384",
        "vit_base_patch32_384",
    ]


def test_input_size_parsed_from_suffix():
    for m in list_models():
        if m.name.endswith("_384"):
            assert m.input_size == 384
        else:
            assert m.input_size == 224


def test_embed_dims_by_family():
    dims = {m.name: m.embed_dim for m in list_models()}
    assert dims["vit_large_patch16_224"] == 1024
    for name, d in dims.items():
        if name.startswith("vit_base"):
            assert d == 768
        elif name.startswith(("vit_small", "deit3_small")):
            assert d == 384
        elif name.startswith("vit_tiny"):
            assert d == 192


def test_patch_size_parsed():
    assert get_model("vit_base_patch8_224").patch_size == 8
    assert get_model("vit_small_patch32_384").patch_size == 32


def test_layer_scale_only_for_deit3():
    for m in list_models():
        assert m.layer_scale == m.name.startswith("deit3")


def test_unknown_model_rejected():
    with pytest.raises(KeyError):
        get_model("vit_giant_patch14_336")
