"""Extract an abridged WordNet 3.0 noun snapshot in WNDB format.

Keeps the listed senses of each vocabulary lemma plus the closure of their
hypernym and holonym ancestors; pointers are restricted to kept synsets and
byte offsets are recomputed.
"""
import collections, sys, os
SRC = sys.argv[1]
OUT = sys.argv[2]
SENSES = {
 'agent':[1,2], 'person':[1], 'author':[1], 'editor':[1], 'group':[1],
 'organization':[1,2,3,5], 'publisher':[1,2,3], 'university':[1,3],
 'school':[1,6], 'institution':[1], 'conference':[1,2,3], 'publication':[1],
 'article':[1], 'book':[1,2], 'booklet':[1], 'manual':[1], 'thesis':[2],
 'proceedings':[2], 'report':[1], 'journal':[2], 'magazine':[1],
 'periodical':[1], 'document':[1], 'chapter':[1], 'page':[1], 'abstract':[2],
 'appendix':[1], 'bibliography':[1], 'title':[2], 'series':[3],
 'volume':[3,4], 'edition':[1], 'year':[1], 'month':[1], 'note':[1,7],
 'citation':[3], 'collection':[1,2], 'dissertation':[1], 'concept':[1],
 'place':[1,2], 'object':[1], 'artifact':[1], 'expression':[2,3], 'item':[3],
 'work':[2,7], 'manifestation':[1,4], 'event':[1], 'student':[1],
 'pupil':[1,3], 'phone':[1], 'transport':[1], 'car':[1],
}
UP = {'@', '@i', '#m', '#s', '#p'}
raw = {}
for line in open(os.path.join(SRC, 'data.noun'), encoding='latin-1'):
    if line.startswith('  '):
        continue
    raw[line.split(' ', 1)[0]] = line.rstrip('\n')
def parse(line):
    body, _, gloss = line.partition(' | ')
    f = body.split()
    off, lexfn, ss, wc = f[0], f[1], f[2], int(f[3], 16)
    words = [(f[4 + 2 * i], f[5 + 2 * i]) for i in range(wc)]
    i = 4 + 2 * wc
    pc = int(f[i]); i += 1
    ptrs = []
    for _ in range(pc):
        ptrs.append(tuple(f[i:i + 4])); i += 4
    return dict(off=off, lexfn=lexfn, ss=ss, words=words, ptrs=ptrs, gloss=gloss.strip())
idx = {}
for line in open(os.path.join(SRC, 'index.noun'), encoding='latin-1'):
    if line.startswith('  '):
        continue
    f = line.split()
    pc = int(f[3])
    idx[f[0]] = f[6 + pc:]
keep = set()
for lemma, senses in SENSES.items():
    for s in senses:
        keep.add(idx[lemma][s - 1])
stack = list(keep)
while stack:
    s = stack.pop()
    for sym, tgt, pos, st in parse(raw[s])['ptrs']:
        if sym in UP and pos == 'n' and tgt not in keep:
            keep.add(tgt); stack.append(tgt)
syn = {s: parse(raw[s]) for s in keep}
order = sorted(keep)
# lemma -> kept synsets in original sense order
lemmas = collections.defaultdict(list)
for lemma, offs in idx.items():
    for o in offs:
        if o in keep:
            lemmas[lemma].append(o)
header = [
 '  1 Abridged noun snapshot extracted from Princeton WordNet 3.0.',
 '  2 WordNet 3.0 Copyright 2006 by Princeton University.  All rights reserved.',
 '  3 See LICENSE.wordnet in this directory for the full license text.',
]
def render(s, newoff, width=8):
    d = syn[s]
    ptrs = [p for p in d['ptrs'] if p[2] == 'n' and p[1] in keep]
    parts = [newoff[s], d['lexfn'], d['ss'], '%02x' % len(d['words'])]
    for w, lid in d['words']:
        parts += [w, lid]
    parts.append('%03d' % len(ptrs))
    for sym, tgt, pos, st in ptrs:
        parts += [sym, newoff[tgt], pos, st]
    return ' '.join(parts) + ' | ' + d['gloss'] + '  '
# offsets are byte positions; fixed width keeps them stable across the two passes
newoff = {s: '0' * 8 for s in order}
for _ in range(3):
    pos = sum(len(h) + 1 for h in header)
    nxt = {}
    for s in order:
        nxt[s] = '%08d' % pos
        pos += len(render(s, newoff).encode('latin-1')) + 1
    newoff = nxt
with open(os.path.join(OUT, 'data.noun'), 'w', encoding='latin-1', newline='\n') as out:
    for h in header:
        out.write(h + '\n')
    for s in order:
        line = render(s, newoff)
        assert out.tell() == int(newoff[s]), (s, out.tell(), newoff[s])
        out.write(line + '\n')
with open(os.path.join(OUT, 'index.noun'), 'w', encoding='latin-1', newline='\n') as out:
    for h in header:
        out.write(h + '\n')
    for lemma in sorted(lemmas):
        offs = lemmas[lemma]
        syms = sorted({p[0] for o in offs for p in syn[o]['ptrs'] if p[2] == 'n' and p[1] in keep})
        parts = [lemma, 'n', str(len(offs)), str(len(syms))] + syms + [str(len(offs)), '0'] + [newoff[o] for o in offs]
        out.write(' '.join(parts) + '  \n')
print(len(keep), 'synsets', len(lemmas), 'lemmas', file=sys.stderr)
