# Higher helicity moments as multigraphs.
from hopflink import MomentGraph, dimension_of, is_correlation_bounded
from hopflink.moments import builtin_table, complete_graph, table_summary

for row in builtin_table():
    print(f"{row.label:20s} computed {str(row.computed):14s} printed {str(row.printed):14s} "
          f"bounded={row.bounded}")
print(table_summary())

# A triple edge and the complete graph on six vertices both break the
# edge-density condition.
print("triple edge:", is_correlation_bounded(MomentGraph(2, [(0, 1)] * 3)))
print("K4:", is_correlation_bounded(complete_graph(4)), " K6:",
      is_correlation_bounded(complete_graph(6)))
print("K6 dimension:", dimension_of(complete_graph(6)))
