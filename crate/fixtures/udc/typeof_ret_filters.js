var filters = new Map();
setup(filters);
router.get('/filter', function (req, res) {
  var filter = filters.get(req.filter);
  if (typeof filter !== 'function') return;
  filter(req.rows);
});
