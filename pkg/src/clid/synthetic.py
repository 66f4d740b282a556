"""Deterministic four-language fixture corpus built from order-2 character chains.

Each class has its own chain, estimated once from a short built-in seed text
(so the transition tables are fixed constants of the package, not of the
seed).  The Irish and Scottish chains are then blended so that 40% of their
transition mass is a shared table, which reproduces the entanglement of that
pair in real data.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from clid.corpus import LANGUAGES, Language, LabeledCorpus, LabeledSample, preprocess

SHARED_MASS = 0.4
# interpolation weights for (trigram, bigram, unigram) estimates
_LAMBDAS = (0.5, 0.35, 0.15)
_MAX_WORD = 14

_SEED_TEXT = {
    Language.IRISH: """
tá an lá go breá inniu agus tá an ghrian ag taitneamh ar an bhfarraige.
chuaigh mé go dtí an siopa leis an bhfear agus cheannaigh mé arán agus bainne.
níl a fhios agam cad a dhéanfaidh siad amárach ach beidh siad sásta.
bhí an cailín ag caint leis an mbean faoin scoil nua sa bhaile mór.
is maith liom an ceol traidisiúnta agus na hamhráin a chan mo sheanmháthair.
tháinig na daoine isteach sa teach nuair a thosaigh an bháisteach.
ba mhian liom dul ar ais go dtí an tír sin lá éigin.
d'fhéach sé ar an leabhar agus dúirt sé nach raibh sé léite aige fós.
bhíodh na páistí ag súgradh cois abhann gach tráthnóna samhraidh.
labhair an sagart leis an bpobal agus d'éist siad go cúramach leis.
""",
    Language.SCOTTISH: """
tha an latha brèagha an-diugh agus tha a' ghrian a' deàrrsadh air a' mhuir.
chaidh mi dhan bhùth leis an duine agus cheannaich mi aran agus bainne.
chan eil fhios agam dè a nì iad a-màireach ach bidh iad toilichte.
bha an nighean a' bruidhinn ris a' bhoireannach mun sgoil ùir anns a' bhaile mhòr.
is toil leam an ceòl traidiseanta agus na h-òrain a sheinn mo sheanmhair.
thàinig na daoine a-steach dhan taigh nuair a thòisich an t-uisge.
bu toigh leam a dhol air ais dhan dùthaich sin latha air choireigin.
choimhead e air an leabhar agus thuirt e nach robh e air a leughadh fhathast.
bhiodh a' chlann a' cluich ri taobh na h-aibhne gach feasgar samhraidh.
bhruidhinn am ministear ris a' choithional agus dh'èist iad gu cùramach ris.
""",
    Language.WELSH: """
mae hi'n braf heddiw ac mae'r haul yn tywynnu ar y môr.
es i i'r siop gyda'r dyn a phrynais i fara a llaeth.
dydw i ddim yn gwybod beth fyddan nhw'n ei wneud yfory ond byddan nhw'n hapus.
roedd y ferch yn siarad gyda'r wraig am yr ysgol newydd yn y dref.
dw i'n hoffi cerddoriaeth draddodiadol a'r caneuon a ganodd fy mam-gu.
daeth y bobl i mewn i'r tŷ pan ddechreuodd hi fwrw glaw.
hoffwn i fynd yn ôl i'r wlad honno rywbryd.
edrychodd e ar y llyfr a dywedodd nad oedd e wedi'i ddarllen eto.
byddai'r plant yn chwarae wrth yr afon bob prynhawn yn yr haf.
siaradodd y gweinidog â'r gynulleidfa a gwrandawon nhw'n astud arno.
""",
    Language.ENGLISH: """
the weather is fine today and the sun is shining on the sea.
i went to the shop with the man and bought bread and milk.
i do not know what they will do tomorrow but they will be happy.
the girl was talking to the woman about the new school in the town.
i like traditional music and the songs that my grandmother sang.
the people came into the house when it started to rain.
i would like to go back to that country some day.
he looked at the book and said that he had not read it yet.
the children used to play by the river every summer evening.
the minister spoke to the congregation and they listened to him carefully.
""",
}


@lru_cache(maxsize=None)
def _alphabet() -> tuple[str, ...]:
    chars = set(" ")
    for text in _SEED_TEXT.values():
        chars.update(preprocess(text))
    return tuple(sorted(chars))


def _estimate(text: str, index: dict[str, int]) -> np.ndarray:
    a = len(index)
    tri = np.zeros((a, a, a))
    bi = np.zeros((a, a))
    uni = np.zeros(a)
    for line in text.strip().splitlines():
        s = "  " + preprocess(line) + " "
        ids = [index[c] for c in s]
        for p, q, r in zip(ids, ids[1:], ids[2:]):
            tri[p, q, r] += 1
            bi[q, r] += 1
            uni[r] += 1
    uni_p = uni / uni.sum()
    bi_tot = bi.sum(axis=1, keepdims=True)
    bi_p = np.where(bi_tot > 0, bi / np.maximum(bi_tot, 1), uni_p)
    tri_tot = tri.sum(axis=2, keepdims=True)
    tri_p = np.where(tri_tot > 0, tri / np.maximum(tri_tot, 1), bi_p[None, :, :])
    l3, l2, l1 = _LAMBDAS
    table = l3 * tri_p + l2 * bi_p[None, :, :] + l1 * uni_p[None, None, :]
    return table / table.sum(axis=2, keepdims=True)


@lru_cache(maxsize=None)
def transition_tables() -> dict[Language, np.ndarray]:
    """Order-2 tables ``P[prev2, prev1, next]`` over the shared alphabet."""
    index = {c: i for i, c in enumerate(_alphabet())}
    tables = {lang: _estimate(_SEED_TEXT[lang], index) for lang in LANGUAGES}
    shared = 0.5 * (tables[Language.IRISH] + tables[Language.SCOTTISH])
    for lang in (Language.IRISH, Language.SCOTTISH):
        tables[lang] = (1 - SHARED_MASS) * tables[lang] + SHARED_MASS * shared
    for t in tables.values():
        t.setflags(write=False)
    return tables


def _sentence(cdf: np.ndarray, alphabet: tuple[str, ...], n_words: int, rng: np.random.Generator) -> str:
    space = alphabet.index(" ")
    p, q = space, space
    words: list[str] = []
    cur: list[str] = []
    while len(words) < n_words:
        r = int(np.searchsorted(cdf[p, q], rng.random(), side="right"))
        r = min(r, len(alphabet) - 1)
        if len(cur) >= _MAX_WORD:
            r = space
        if r == space:
            if cur:
                words.append("".join(cur))
                cur = []
        else:
            cur.append(alphabet[r])
        p, q = q, r
    return " ".join(words)


def generate_synthetic(seed: int = 7, per_class: int = 400, avg_len: float = 15) -> LabeledCorpus:
    """``per_class`` sentences for each language; byte-identical for a given seed."""
    if per_class < 1:
        raise ValueError("per_class must be at least 1")
    alphabet = _alphabet()
    samples = []
    for lang, table in transition_tables().items():
        cdf = np.cumsum(table, axis=2)
        rng = np.random.default_rng([seed, int(lang)])
        for i in range(per_class):
            n_words = 2 + int(rng.poisson(max(avg_len - 2, 0)))
            text = preprocess(_sentence(cdf, alphabet, n_words, rng))
            samples.append(LabeledSample(text, lang, f"synthetic:{seed}:{lang.code}:{i}"))
    return LabeledCorpus(tuple(samples), {"source": f"synthetic(seed={seed})"})
