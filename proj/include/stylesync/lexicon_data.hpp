#pragma once

namespace stylesync {

// Default marker lexicon, embedded so the tools run without a data path.
// data/default.lex ships the same text; a test keeps the two in sync.
// Eight function-word categories assembled from public stop-word and
// grammar lists.
inline constexpr const char* kDefaultLexiconText = R"lex(% stylesync default marker lexicon
% eight function-word categories; one entry per line; '#' starts a category

#articles
a
an
the

#auxiliary_verbs
am
are
aren't
be
been
being
can
cannot
can't
could
couldn't
did
didn't
do
does
doesn't
doing
done
don't
had
hadn't
has
hasn't
have
haven't
having
is
isn't
may
might
must
mustn't
ought
shall
should
shouldn't
was
wasn't
were
weren't
will
won't
would
wouldn't

#conjunctions
although
and
as
because
but
however
if
moreover
neither
nevertheless
nonetheless
nor
once
or
since
so
than
therefore
though
thus
unless
until
whereas
whether
while
yet

#adverbs
absolutely
actually
again
almost
already
also
always
anyway
apparently
barely
basically
certainly
clearly
completely
constantly
definitely
especially
even
eventually
ever
exactly
extremely
fairly
finally
frequently
generally
hardly
here
honestly
hopefully
immediately
indeed
instead
just
largely
lately
likely
literally
maybe
merely
mostly
nearly
never
not
now
obviously
often
only
particularly
perhaps
possibly
pretty
probably
quickly
quite
rarely
rather
really
recently
relatively
seriously
simply
slightly
sometimes
somewhat
soon
still
surely
then
there
too
totally
truly
usually
very
well

#quantifiers
all
any
both
each
either
enough
every
few
fewer
least
less
little
lot
lots
many
more
most
much
none
plenty
several
some
such
whole

#indefinite_pronouns
anybody
anyone
anything
everybody
everyone
everything
it
it's
itself
nobody
nothing
one
other
others
somebody
someone
something
stuff
that
these
thing
things
this
those
what
whatever
which
whichever

#personal_pronouns
he
her
hers
herself
him
himself
his
i
i'd
i'll
i'm
i've
me
mine
my
myself
our
ours
ourselves
she
she'd
she'll
she's
their
theirs
them
themselves
they
they'd
they'll
they're
they've
us
we
we'd
we'll
we're
we've
you
you'd
you'll
you're
you've
your
yours
yourself
yourselves

#prepositions
about
above
across
after
against
along
among
around
at
before
behind
below
beneath
beside
besides
between
beyond
by
despite
down
during
except
for
from
in
inside
into
near
of
off
on
onto
out
outside
over
past
per
through
throughout
till
to
toward
towards
under
underneath
up
upon
with
within
without
)lex";

}  // namespace stylesync
